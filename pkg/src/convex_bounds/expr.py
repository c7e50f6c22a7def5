"""Univariate expression language: parser, serializer, jets and bytecode.

Grammar::

    expr   := term (("+" | "-") term)*
    term   := factor (("*" | "/") factor)*
    factor := "-" factor | power
    power  := atom ("^" factor)?
    atom   := number | "x" | "e" | "pi" | ident "(" expr ")" | "(" expr ")"

``^`` binds tighter than unary minus (``-x^2`` is ``-(x^2)``) and is
right-associative. Functions: exp, ln, sqrt, sin, cos.

Derivatives come from truncated Taylor arithmetic ("jets") up to order 3.
The same tree compiles to a postfix program consumed by the quadrature kernel.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from functools import cached_property
from typing import Union

import numpy as np

from convex_bounds.errors import DomainError, ParseError, UnknownIdentifier

MAX_ORDER = 3
FUNCTIONS = ("exp", "ln", "sqrt", "sin", "cos")
CONSTANTS = {"e": math.e, "pi": math.pi}


# --------------------------------------------------------------------------
# syntax tree


@dataclass(frozen=True)
class Num:
    value: float

    def __post_init__(self):
        if not math.isfinite(self.value):
            raise ValueError("numeric literal must be finite")


@dataclass(frozen=True)
class Var:
    pass


@dataclass(frozen=True)
class Const:
    name: str


@dataclass(frozen=True)
class Neg:
    arg: "Node"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Call:
    func: str
    arg: "Node"


Node = Union[Num, Var, Const, Neg, BinOp, Call]
Operand = Union["Expression", Node, float, int]


def _num(v: float) -> Node:
    v = float(v)
    return Neg(Num(-v)) if v < 0 else Num(v)


def _node(v: Operand) -> Node:
    if isinstance(v, Expression):
        return v.root
    if isinstance(v, (Num, Var, Const, Neg, BinOp, Call)):
        return v
    return _num(v)


@dataclass(frozen=True)
class Expression:
    """Immutable syntax tree of a function of ``x``.

    Equality is structural; ``source_text`` is carried along for reports.
    Arithmetic operators build new expressions, which is how integrands such
    as ``(x - c) * f`` are assembled.
    """

    root: Node
    source_text: str = field(default="", compare=False)

    def __str__(self) -> str:
        return self.source_text or serialize(self.root)

    @property
    def text(self) -> str:
        return str(self)

    # -- construction --------------------------------------------------
    @classmethod
    def of(cls, v: Operand | str) -> "Expression":
        if isinstance(v, Expression):
            return v
        if isinstance(v, str):
            return parse(v)
        root = _node(v)
        return cls(root, serialize(root))

    def _bin(self, op: str, other: Operand, swap: bool = False) -> "Expression":
        a, b = self.root, _node(other)
        if swap:
            a, b = b, a
        root = BinOp(op, a, b)
        return Expression(root, serialize(root))

    def __add__(self, o):
        return self._bin("+", o)

    def __radd__(self, o):
        return self._bin("+", o, True)

    def __sub__(self, o):
        return self._bin("-", o)

    def __rsub__(self, o):
        return self._bin("-", o, True)

    def __mul__(self, o):
        return self._bin("*", o)

    def __rmul__(self, o):
        return self._bin("*", o, True)

    def __truediv__(self, o):
        return self._bin("/", o)

    def __rtruediv__(self, o):
        return self._bin("/", o, True)

    def __pow__(self, o):
        return self._bin("^", o)

    def __rpow__(self, o):
        return self._bin("^", o, True)

    def __neg__(self):
        root = Neg(self.root)
        return Expression(root, serialize(root))

    # -- evaluation ----------------------------------------------------
    @cached_property
    def program(self) -> "Program":
        return compile_program(self.root)

    def __call__(self, x):
        """Value(s) at ``x``; NaN/inf where undefined (no exception)."""
        from convex_bounds import kernel

        if np.ndim(x) == 0:
            return kernel.eval_point(self.program, float(x))
        return kernel.eval_points(self.program, np.asarray(x, dtype=float))

    def value(self, x: float) -> float:
        """Value at ``x``; raises :class:`DomainError` if not finite."""
        v = self(x)
        if not math.isfinite(v):
            raise DomainError(f"{self} is undefined or not finite", x)
        return v

    def values(self, xs) -> np.ndarray:
        v = self(np.asarray(xs, dtype=float))
        bad = ~np.isfinite(v)
        if bad.any():
            x0 = float(np.asarray(xs, dtype=float).ravel()[np.argmax(bad.ravel())])
            raise DomainError(f"{self} is undefined or not finite", x0)
        return v


X = Expression(Var(), "x")


def call(func: str, arg: Operand) -> Expression:
    if func not in FUNCTIONS:
        raise ValueError(f"unknown function {func!r}")
    root = Call(func, _node(arg))
    return Expression(root, serialize(root))


def const(v: float) -> Expression:
    return Expression.of(float(v))


# --------------------------------------------------------------------------
# parser

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<ident>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^()]))"
)


def _tokenize(source: str) -> list[tuple[str, str, int]]:
    data = source.encode("utf-8")
    tokens = []
    pos = 0
    text = data.decode("ascii", errors="replace")
    while pos < len(text):
        if text[pos:].strip() == "":
            pos = len(text)
            break
        m = _TOKEN.match(text, pos)
        if m is None or m.end() == pos:
            bad = pos + (len(text[pos:]) - len(text[pos:].lstrip()))
            raise ParseError(f"unexpected character {text[bad]!r}", bad)
        kind = m.lastgroup
        start = m.start(kind)
        tokens.append((kind, m.group(kind), start))
        pos = m.end()
    tokens.append(("end", "", len(data)))
    return tokens


class _Parser:
    def __init__(self, source: str):
        self.tokens = _tokenize(source)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value: str):
        kind, text, off = self.peek()
        if text != value or kind != "op":
            what = "end of input" if kind == "end" else repr(text)
            raise ParseError(f"expected {value!r}, found {what}", off)
        self.take()

    def expr(self) -> Node:
        node = self.term()
        while self.peek()[0] == "op" and self.peek()[1] in "+-":
            op = self.take()[1]
            node = BinOp(op, node, self.term())
        return node

    def term(self) -> Node:
        node = self.factor()
        while self.peek()[0] == "op" and self.peek()[1] in "*/":
            op = self.take()[1]
            node = BinOp(op, node, self.factor())
        return node

    def factor(self) -> Node:
        kind, text, _ = self.peek()
        if kind == "op" and text == "-":
            self.take()
            return Neg(self.factor())
        return self.power()

    def power(self) -> Node:
        base = self.atom()
        kind, text, _ = self.peek()
        if kind == "op" and text == "^":
            self.take()
            return BinOp("^", base, self.factor())
        return base

    def atom(self) -> Node:
        kind, text, off = self.take()
        if kind == "num":
            return Num(float(text))
        if kind == "ident":
            if text == "x":
                return Var()
            if text in CONSTANTS:
                return Const(text)
            if text in FUNCTIONS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return Call(text, arg)
            raise UnknownIdentifier(text, off)
        if kind == "op" and text == "(":
            node = self.expr()
            self.expect(")")
            return node
        what = "end of input" if kind == "end" else repr(text)
        raise ParseError(f"expected expression, found {what}", off)


def parse(source: str) -> Expression:
    """Parse ``source`` into an :class:`Expression`.

    >>> parse("x^2").root
    BinOp(op='^', left=Var(), right=Num(value=2.0))
    """
    if not source or not source.strip():
        raise ParseError("empty expression", 0)
    p = _Parser(source)
    root = p.expr()
    kind, text, off = p.peek()
    if kind != "end":
        raise ParseError(f"unexpected {text!r}", off)
    return Expression(root, source.strip())


_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "^": 4}


def _prec(node: Node) -> int:
    if isinstance(node, BinOp):
        return _PREC[node.op]
    if isinstance(node, Neg):
        return 3
    return 5


def _number(v: float) -> str:
    text = repr(v)
    return text[:-2] if text.endswith(".0") else text


def serialize(node: Node) -> str:
    """Text with the fewest parentheses that parses back to the same tree."""
    if isinstance(node, Expression):
        node = node.root
    if isinstance(node, Num):
        return _number(node.value) if node.value >= 0 else f"(-{_number(-node.value)})"
    if isinstance(node, Var):
        return "x"
    if isinstance(node, Const):
        return node.name
    if isinstance(node, Call):
        return f"{node.func}({serialize(node.arg)})"
    if isinstance(node, Neg):
        inner = serialize(node.arg)
        return f"-{inner}" if _prec(node.arg) >= 3 else f"-({inner})"
    if isinstance(node, BinOp):
        p = _PREC[node.op]
        left, right = serialize(node.left), serialize(node.right)
        if node.op == "^":
            if _prec(node.left) < 5:
                left = f"({left})"
            if _prec(node.right) < 3:
                right = f"({right})"
            return f"{left}^{right}"
        if _prec(node.left) < p:
            left = f"({left})"
        if _prec(node.right) <= p:
            right = f"({right})"
        return f"{left} {node.op} {right}"
    raise TypeError(f"not an expression node: {node!r}")


def _has_var(node: Node) -> bool:
    if isinstance(node, Var):
        return True
    if isinstance(node, (Num, Const)):
        return False
    if isinstance(node, (Neg, Call)):
        return _has_var(node.arg)
    return _has_var(node.left) or _has_var(node.right)


def _const_value(node: Node) -> float | None:
    """Value of a variable-free subtree, or None if not finite."""
    if _has_var(node):
        return None
    with np.errstate(all="ignore"):
        v = float(_jet_series(node, np.zeros(1), 0, np.zeros(1, dtype=bool))[0][0])
    return v if math.isfinite(v) else None


def _int_exponent(node: Node) -> int | None:
    v = _const_value(node)
    if v is not None and v == round(v) and abs(v) <= 1024:
        return int(v)
    return None


# --------------------------------------------------------------------------
# jets (truncated Taylor arithmetic, vectorised over points)
#
# A series is a list of arrays c[k] = f^(k)(x) / k!.  ``bad`` accumulates the
# points where some subexpression left its domain.


def _s_mul(a, b, n):
    return [sum(a[i] * b[k - i] for i in range(k + 1)) for k in range(n + 1)]


def _s_div(a, b, n, bad):
    b0 = b[0]
    bad |= b0 == 0
    with np.errstate(all="ignore"):
        q = []
        for k in range(n + 1):
            acc = a[k] - sum(b[i] * q[k - i] for i in range(1, k + 1))
            q.append(acc / b0)
    return q


def _s_exp(a, n):
    e = [np.exp(a[0])]
    for k in range(1, n + 1):
        e.append(sum(j * a[j] * e[k - j] for j in range(1, k + 1)) / k)
    return e


def _s_ln(a, n, bad):
    a0 = a[0]
    bad |= ~(a0 > 0)
    with np.errstate(all="ignore"):
        out = [np.log(a0)]
        for k in range(1, n + 1):
            acc = a[k] - sum(j * out[j] * a[k - j] for j in range(1, k)) / k
            out.append(acc / a0)
    return out


def _s_pow_real(a, r, n, bad):
    """a ** r for a constant non-integer r; the base must be positive."""
    a0 = a[0]
    if n == 0 and r > 0:
        bad |= ~(a0 >= 0)
    else:
        bad |= ~(a0 > 0)
    with np.errstate(all="ignore"):
        out = [np.power(a0, r)]
        for k in range(1, n + 1):
            acc = sum((r * j - (k - j)) * a[j] * out[k - j] for j in range(1, k + 1))
            out.append(acc / (k * a0))
    return out


def _s_sqrt(a, n, bad):
    return _s_pow_real(a, 0.5, n, bad)


def _s_sincos(a, n):
    s = [np.sin(a[0])]
    c = [np.cos(a[0])]
    for k in range(1, n + 1):
        s.append(sum(j * a[j] * c[k - j] for j in range(1, k + 1)) / k)
        c.append(-sum(j * a[j] * s[k - j] for j in range(1, k + 1)) / k)
    return s, c


def _s_powi(a, m, n, bad):
    if m == 0:
        return [np.ones_like(a[0])] + [np.zeros_like(a[0]) for _ in range(n)]
    result = None
    base = a
    e = abs(m)
    while e:
        if e & 1:
            result = base if result is None else _s_mul(result, base, n)
        e >>= 1
        if e:
            base = _s_mul(base, base, n)
    if m < 0:
        one = [np.ones_like(a[0])] + [np.zeros_like(a[0]) for _ in range(n)]
        result = _s_div(one, result, n, bad)
    return result


def _jet_series(node: Node, xs: np.ndarray, n: int, bad: np.ndarray):
    zeros = lambda: np.zeros_like(xs)  # noqa: E731
    if isinstance(node, Num):
        return [np.full_like(xs, node.value)] + [zeros() for _ in range(n)]
    if isinstance(node, Const):
        return [np.full_like(xs, CONSTANTS[node.name])] + [zeros() for _ in range(n)]
    if isinstance(node, Var):
        out = [xs.copy()] + [zeros() for _ in range(n)]
        if n >= 1:
            out[1] = np.ones_like(xs)
        return out
    if isinstance(node, Neg):
        return [-c for c in _jet_series(node.arg, xs, n, bad)]
    if isinstance(node, Call):
        a = _jet_series(node.arg, xs, n, bad)
        f = node.func
        if f == "exp":
            return _s_exp(a, n)
        if f == "ln":
            return _s_ln(a, n, bad)
        if f == "sqrt":
            return _s_sqrt(a, n, bad)
        s, c = _s_sincos(a, n)
        return s if f == "sin" else c
    # BinOp
    op = node.op
    if op == "^":
        m = _int_exponent(node.right)
        a = _jet_series(node.left, xs, n, bad)
        if m is not None:
            return _s_powi(a, m, n, bad)
        r = _const_value(node.right)
        if r is not None:
            return _s_pow_real(a, r, n, bad)
        b = _jet_series(node.right, xs, n, bad)
        return _s_exp(_s_mul(b, _s_ln(a, n, bad), n), n)
    a = _jet_series(node.left, xs, n, bad)
    b = _jet_series(node.right, xs, n, bad)
    if op == "+":
        return [p + q for p, q in zip(a, b)]
    if op == "-":
        return [p - q for p, q in zip(a, b)]
    if op == "*":
        return _s_mul(a, b, n)
    return _s_div(a, b, n, bad)


_FACT = (1.0, 1.0, 2.0, 6.0)


def eval_jets(e: Expression | Node, xs, order: int) -> np.ndarray:
    """Derivatives ``0..order`` at every point of ``xs``, shape ``(order+1, len(xs))``.

    Raises :class:`DomainError` naming the first point where some
    subexpression is undefined or the result is not finite.
    """
    if not 0 <= order <= MAX_ORDER:
        raise ValueError(f"order must be in 0..{MAX_ORDER}")
    root = e.root if isinstance(e, Expression) else e
    xs = np.atleast_1d(np.asarray(xs, dtype=float))
    bad = np.zeros(xs.shape, dtype=bool)
    with np.errstate(all="ignore"):
        series = _jet_series(root, xs, order, bad)
        out = np.array([series[k] * _FACT[k] for k in range(order + 1)])
    bad |= ~np.isfinite(out).all(axis=0)
    if bad.any():
        x0 = float(xs[np.argmax(bad)])
        raise DomainError(f"{serialize(root)} is undefined or not finite", x0)
    return out


@dataclass(frozen=True)
class Jet:
    """Value and derivatives ``(f, f', f'', f''')`` at a point, truncated at ``order``."""

    order: int
    coefficients: tuple[float, ...]

    def __post_init__(self):
        if len(self.coefficients) != self.order + 1:
            raise ValueError("need order+1 coefficients")

    def __getitem__(self, k: int) -> float:
        return self.coefficients[k]

    def __iter__(self):
        return iter(self.coefficients)

    def _taylor(self):
        return [np.array([c / _FACT[k]]) for k, c in enumerate(self.coefficients)]

    @classmethod
    def _from_taylor(cls, s, bad=None) -> "Jet":
        if bad is not None and bad.any():
            raise DomainError("jet operation out of domain")
        return cls(len(s) - 1, tuple(float(c[0]) * _FACT[k] for k, c in enumerate(s)))

    def _coerce(self, other) -> "Jet":
        if isinstance(other, Jet):
            if other.order != self.order:
                raise ValueError("jets of different order")
            return other
        return Jet(self.order, (float(other),) + (0.0,) * self.order)

    def __add__(self, other):
        o = self._coerce(other)
        return Jet(self.order, tuple(p + q for p, q in zip(self, o)))

    __radd__ = __add__

    def __sub__(self, other):
        o = self._coerce(other)
        return Jet(self.order, tuple(p - q for p, q in zip(self, o)))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __neg__(self):
        return Jet(self.order, tuple(-c for c in self))

    def __mul__(self, other):
        o = self._coerce(other)
        return Jet._from_taylor(_s_mul(self._taylor(), o._taylor(), self.order))

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = self._coerce(other)
        bad = np.zeros(1, dtype=bool)
        return Jet._from_taylor(_s_div(self._taylor(), o._taylor(), self.order, bad), bad)

    def __rtruediv__(self, other):
        return self._coerce(other) / self


def eval_jet(e: Expression | str, x: float, order: int) -> Jet:
    """Value and first ``order`` derivatives of ``e`` at ``x``.

    >>> eval_jet(parse("x^2"), 2.0, 2).coefficients
    (4.0, 4.0, 2.0)
    """
    e = Expression.of(e)
    out = eval_jets(e, [float(x)], order)
    return Jet(order, tuple(float(c) for c in out[:, 0]))


def derivative_values(e: Expression, xs, level: int) -> np.ndarray:
    """``level``-th derivative of ``e`` sampled at ``xs``."""
    return eval_jets(e, xs, level)[level]


# --------------------------------------------------------------------------
# bytecode for the quadrature kernel

OP_CONST, OP_VAR, OP_NEG, OP_ADD, OP_SUB, OP_MUL, OP_DIV = range(7)
OP_POW, OP_POWI, OP_EXP, OP_LN, OP_SQRT, OP_SIN, OP_COS = range(7, 14)

_BINOPS = {"+": OP_ADD, "-": OP_SUB, "*": OP_MUL, "/": OP_DIV, "^": OP_POW}
_CALLS = {"exp": OP_EXP, "ln": OP_LN, "sqrt": OP_SQRT, "sin": OP_SIN, "cos": OP_COS}


@dataclass(frozen=True, eq=False)
class Program:
    """Postfix instruction stream; ``args[i]`` is the operand of ``ops[i]``."""

    ops: np.ndarray
    args: np.ndarray
    stack_size: int


def compile_program(root: Node) -> Program:
    ops: list[int] = []
    args: list[float] = []
    depth = 0
    peak = 0

    def emit(op, arg=0.0, delta=0):
        nonlocal depth, peak
        ops.append(op)
        args.append(arg)
        depth += delta
        peak = max(peak, depth)

    def walk(node):
        if isinstance(node, Num):
            emit(OP_CONST, node.value, 1)
        elif isinstance(node, Const):
            emit(OP_CONST, CONSTANTS[node.name], 1)
        elif isinstance(node, Var):
            emit(OP_VAR, 0.0, 1)
        elif isinstance(node, Neg):
            walk(node.arg)
            emit(OP_NEG)
        elif isinstance(node, Call):
            walk(node.arg)
            emit(_CALLS[node.func])
        elif node.op == "^" and (m := _int_exponent(node.right)) is not None:
            walk(node.left)
            emit(OP_POWI, float(m))
        else:
            walk(node.left)
            walk(node.right)
            emit(_BINOPS[node.op], 0.0, -1)

    walk(root)
    return Program(np.array(ops, dtype=np.int32), np.array(args, dtype=np.float64), peak)
