"""Weighted Lp bounds: the Hardy ratio sandwich, Hoelder products and product HH bounds.

The Hardy ratio is ``||x^-alpha F||_p / ||x^(1-alpha) f||_p`` with ``F(x)``
the integral of f over [0, x]. Both half-line norms are computed on dyadic
panels ``[2^k, 2^(k+1)]`` with Gauss-Legendre nodes, in the log domain so
that large p does not overflow. ``F`` at the nodes comes from cumulative
panel sums plus one inner Gauss-Legendre rule per node, so the nested integral
costs O(panels * nodes^2) evaluations instead of nested adaptive quadrature.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import reduce

import numpy as np

from convex_bounds.convexity import ConvexityCertificate, Interval, certify, require_convex
from convex_bounds.errors import DivergenceError, NegativeWeight, NotPositive, ParameterError
from convex_bounds.expr import Expression
from convex_bounds.hh import TOL, Comparison, Enclosure
from convex_bounds.quadrature import FINITE_TOL, as_spec, integrate

HARDY_WINDOW = (0.0, 32.0)
GL_NODES = 20
FIRST_PANEL = -40  # panels start at 2^-40; [0, 2^-40] is handled in closed form
LAST_PANEL = 400
CHUNK = 16
AGREE = 3
STALL = 8

_T, _W = np.polynomial.legendre.leggauss(GL_NODES)
_U = 0.5 * (_T + 1.0)  # nodes on [0, 1]
_LOG_W = np.log(0.5 * _W)


@dataclass(frozen=True)
class HardyParams:
    alpha: float
    p: float

    def __post_init__(self):
        if not (math.isfinite(self.p) and self.p > 1):
            raise ParameterError(f"need 1 < p < inf, got p={self.p}")
        if not (math.isfinite(self.alpha) and self.alpha * self.p > 1):
            raise ParameterError(f"need alpha*p > 1, got alpha={self.alpha}, p={self.p}")

    @property
    def lower(self) -> float:
        """Reverse Hardy constant for convex f."""
        return 2.0 ** (1.0 - self.alpha + 1.0 / self.p)

    @property
    def upper(self) -> float:
        """Hardy constant."""
        return 1.0 / (self.alpha - 1.0 / self.p)


def _logsumexp(v: np.ndarray, axis=None):
    m = np.max(v, axis=axis, keepdims=True)
    m = np.where(np.isfinite(m), m, 0.0)
    with np.errstate(divide="ignore"):
        out = np.log(np.sum(np.exp(v - m), axis=axis, keepdims=True)) + m
    return np.squeeze(out, axis=axis) if axis is not None else float(out.reshape(()))


class _Tally:
    """Running log-sum of panel contributions with a geometric tail prediction."""

    def __init__(self, log_edge: float, tol: float):
        self.total = log_edge
        self.prev = -math.inf
        self.prev_estimate = None
        self.agree = 0
        self.rising = 0
        self.done = False
        self.estimate = math.nan
        self.tol = tol

    def add(self, c: float, k: int) -> None:
        if self.done:
            return
        self.total = float(np.logaddexp(self.total, c))
        if c == -math.inf:
            self._finish(self.total)
            return
        ratio = math.exp(c - self.prev) if self.prev > -math.inf else math.inf
        self.prev = c
        if ratio >= 1.0:
            self.rising = self.rising + 1 if k > 0 else 0
            self.agree = 0
            self.prev_estimate = None
            if self.rising >= STALL:
                raise DivergenceError("weighted norm diverges: panel contributions not decreasing")
            return
        self.rising = 0
        estimate = float(np.logaddexp(self.total, c + math.log(ratio / (1.0 - ratio))))
        if c - self.total < math.log(self.tol * 1e-3):
            self._finish(estimate)
            return
        if self.prev_estimate is not None and abs(estimate - self.prev_estimate) < self.tol:
            self.agree += 1
            if self.agree >= AGREE:
                self._finish(estimate)
                return
        else:
            self.agree = 0
        self.prev_estimate = estimate

    def _finish(self, estimate: float) -> None:
        self.estimate = estimate
        self.done = True


def hardy_log_norms(f, params: HardyParams, tol: float = TOL) -> tuple[float, float]:
    """``(log ||x^-alpha F||_p^p, log ||x^(1-alpha) f||_p^p)`` over [0, inf)."""
    e = as_spec(f).expression
    alpha, p = params.alpha, params.p
    beta = p * (1.0 - alpha) + 1.0  # both integrands behave like x^(beta-1) at 0
    if beta <= 0:
        raise DivergenceError(f"norms diverge at 0 for alpha={alpha} >= 1 + 1/p")
    f0 = e.value(0.0)
    if not f0 > 0:
        raise NotPositive(0.0, f0)
    x0 = 2.0**FIRST_PANEL
    log_edge = p * math.log(f0) + beta * math.log(x0) - math.log(beta)
    num, den = _Tally(log_edge, tol), _Tally(log_edge, tol)
    carry = x0 * e.value(0.5 * x0)  # F(x0) by the midpoint rule, error O(x0^3)
    k = FIRST_PANEL
    while not (num.done and den.done):
        if k > LAST_PANEL:
            raise DivergenceError("weighted norm did not settle before x = 2^400")
        ks = np.arange(k, min(k + CHUNK, LAST_PANEL + 1))
        left = np.ldexp(1.0, ks)  # panel [l, 2l] has width l
        nodes = left[:, None] * (1.0 + _U[None, :])
        inner = left[:, None, None] + (nodes - left[:, None])[:, :, None] * _U[None, None, :]
        with np.errstate(all="ignore"):
            fn = e(nodes)
            fi = e(inner)
        if not (np.isfinite(fn).all() and np.isfinite(fi).all()):
            raise DivergenceError(f"non-finite value of {e} beyond x = {left[0]!r}")
        if (fn < 0).any() or (fi < 0).any():
            bad = nodes[fn < 0]
            x = float(bad[0]) if bad.size else float(left[0])
            raise NegativeWeight(x, float(e.value(x)))
        panel = left * (0.5 * (fn @ _W))
        start = carry + np.concatenate([[0.0], np.cumsum(panel)[:-1]])
        carry = start[-1] + panel[-1]
        partial = (nodes - left[:, None]) * (0.5 * (fi @ _W))
        big_f = start[:, None] + partial
        log_x = np.log(nodes)
        with np.errstate(divide="ignore"):
            l_num = p * (np.log(big_f) - alpha * log_x)
            l_den = p * ((1.0 - alpha) * log_x + np.log(fn))
        c_num = np.log(left) + _logsumexp(l_num + _LOG_W, axis=1)
        c_den = np.log(left) + _logsumexp(l_den + _LOG_W, axis=1)
        for j, kk in enumerate(ks):
            num.add(float(c_num[j]), int(kk))
            den.add(float(c_den[j]), int(kk))
        k = int(ks[-1]) + 1
    return num.estimate, den.estimate


def _check_positive(e: Expression, iv: Interval, strict: bool, grid: int = 257) -> None:
    xs = iv.grid(grid)
    vals = e.values(xs)
    i = int(np.argmin(vals))
    if strict and not vals[i] > 0:
        raise NotPositive(float(xs[i]), float(vals[i]))
    if vals[i] < 0:
        raise NegativeWeight(float(xs[i]), float(vals[i]))


def hardy_ratio(f, params: HardyParams, tol: float = TOL) -> Enclosure:
    """``2^(1-alpha+1/p) <= ||x^-alpha F||_p / ||x^(1-alpha) f||_p <= 1/(alpha-1/p)``.

    Convexity and positivity are certified on a truncation window only.

    >>> r = hardy_ratio("exp(-x)", HardyParams(1, 2))
    >>> round(r.value, 6), round(r.lower, 6), r.upper
    (1.665109, 1.414214, 2.0)
    """
    e = as_spec(f).expression
    window = Interval(*HARDY_WINDOW)
    _check_positive(e, window, strict=True)
    require_convex(e, 0, window)
    log_num, log_den = hardy_log_norms(e, params, tol)
    ratio = math.exp((log_num - log_den) / params.p)
    return Enclosure(params.lower, ratio, params.upper)


def _product(es: list[Expression]) -> Expression:
    return reduce(lambda u, v: u * v, es)


def holder_product_check(us, iv) -> Comparison:
    """``(int prod u_k)^n <= prod int u_k^n`` for nonnegative u_1..u_n."""
    es = [as_spec(u).expression for u in us]
    if not es:
        raise ParameterError("need at least one function")
    iv = Interval.of(iv)
    for e in es:
        _check_positive(e, iv, strict=False)
    n = len(es)
    lhs = integrate(_product(es), iv, FINITE_TOL).value ** n
    rhs = math.prod(integrate(e**n, iv, FINITE_TOL).value for e in es)
    return Comparison(lhs, rhs)


def power_convexity(u, n: int, iv) -> ConvexityCertificate:
    """Certificate for ``u^n`` given u positive and convex."""
    if n < 1:
        raise ParameterError(f"n must be a positive integer, got {n}")
    e = as_spec(u).expression
    iv = Interval.of(iv)
    _check_positive(e, iv, strict=True)
    require_convex(e, 0, iv)
    return certify(e ** int(n), 0, iv)


def product_bound(us, iv) -> Comparison:
    """Mean of ``prod u_k`` against ``1/2 prod (u_k(a)^n + u_k(b)^n)^(1/n)``."""
    es = [as_spec(u).expression for u in us]
    n = len(es)
    if n < 2:
        raise ParameterError(f"need at least two functions, got {n}")
    iv = Interval.of(iv)
    for e in es:
        _check_positive(e, iv, strict=False)
        require_convex(e, 0, iv)
    lhs = integrate(_product(es), iv, FINITE_TOL * iv.length).value / iv.length
    rhs = 0.5 * math.prod((e.value(iv.a) ** n + e.value(iv.b) ** n) ** (1.0 / n) for e in es)
    return Comparison(lhs, rhs)


def ion_bound(u, v, p: float, q: float, iv) -> Comparison:
    """Mean of ``u v`` against ``1/2 (u(a)^p + u(b)^p)^(1/p) (v(a)^q + v(b)^q)^(1/q)``."""
    if not (p > 1 and q > 1):
        raise ParameterError(f"need p, q > 1, got p={p}, q={q}")
    if abs(1.0 / p + 1.0 / q - 1.0) > 1e-12:
        raise ParameterError(f"p={p} and q={q} are not conjugate")
    eu, ev = as_spec(u).expression, as_spec(v).expression
    iv = Interval.of(iv)
    for e in (eu, ev):
        _check_positive(e, iv, strict=False)
        require_convex(e, 0, iv)
    lhs = integrate(eu * ev, iv, FINITE_TOL * iv.length).value / iv.length
    a, b = iv
    rhs = 0.5 * (eu.value(a) ** p + eu.value(b) ** p) ** (1.0 / p) * (ev.value(a) ** q + ev.value(b) ** q) ** (1.0 / q)
    return Comparison(lhs, rhs)


__all__ = [
    "HardyParams",
    "hardy_log_norms",
    "hardy_ratio",
    "holder_product_check",
    "power_convexity",
    "product_bound",
    "ion_bound",
]
