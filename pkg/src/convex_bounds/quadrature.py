"""Independent numerical ground truth for every bound.

* :func:`integrate` - adaptive Simpson with Richardson correction on [a, b];
  integrable endpoint singularities are handled by guard offsets that halve
  towards the endpoint, with a geometric extrapolation of what is left.
* :func:`integrate_half_line` - doubling panels until the last one no longer
  matters.
* :func:`sum_series` - partial sums with a geometric tail bound, or an
  Euler-Maclaurin tail when the terms decay algebraically.
* :func:`random_convex` - seeded conic combinations that are convex at the
  requested derivative level by construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from convex_bounds import kernel
from convex_bounds.convexity import Interval
from convex_bounds.errors import DivergenceError, QuadratureError
from convex_bounds.expr import X, Expression, call, eval_jets

FINITE_TOL = 1e-10
HALF_LINE_TOL = 1e-8
SERIES_TOL = 1e-12
REL_FLOOR = 1e-13

MAX_HALVINGS = 80
MAX_PANELS = 200
STALL_PANELS = 6


@dataclass(frozen=True)
class HalfLine:
    """The domain [start, inf)."""

    start: float = 0.0

    @property
    def a(self) -> float:
        return self.start

    @property
    def b(self) -> float:
        return math.inf


@dataclass(frozen=True)
class Generated:
    seed: int
    index: int
    family: str


@dataclass(frozen=True)
class FunctionSpec:
    expression: Expression
    domain: Union[Interval, HalfLine, None] = None
    provenance: Union[str, Generated] = field(default="literal", compare=False)

    @classmethod
    def parse(cls, source: str, domain=None) -> "FunctionSpec":
        return cls(Expression.of(source), _domain(domain))

    @property
    def text(self) -> str:
        return str(self.expression)

    def __call__(self, x):
        return self.expression(x)

    def value(self, x: float) -> float:
        return self.expression.value(x)


def _domain(d):
    if d is None or isinstance(d, (Interval, HalfLine)):
        return d
    return Interval.of(d)


def as_spec(f, domain=None) -> FunctionSpec:
    """Coerce text, an :class:`Expression` or a spec into a :class:`FunctionSpec`."""
    if isinstance(f, FunctionSpec):
        return f
    return FunctionSpec(Expression.of(f), _domain(domain))


def _expr(f) -> Expression:
    if isinstance(f, FunctionSpec):
        return f.expression
    return Expression.of(f)


@dataclass(frozen=True)
class QuadratureResult:
    value: float
    error_estimate: float
    subdivisions: int


def _simpson(expr: Expression, a: float, b: float, tol: float) -> QuadratureResult:
    # no point asking for more than double precision can give on this integrand
    probe = np.abs(kernel.eval_points(expr.program, np.linspace(a, b, 17)))
    if np.isfinite(probe).all():
        tol = max(tol, REL_FLOOR * (b - a) * float(probe.max()))
    value, err, leaves, status = kernel.simpson(expr.program, a, b, tol)
    if status == 1:
        raise QuadratureError(f"non-finite sample of {expr} inside [{a}, {b}]")
    if status == 2 and not err <= tol:
        # leaves stuck on rounding noise are fine as long as the total estimate is within tol
        raise QuadratureError(f"no convergence for {expr} on [{a}, {b}] (error estimate {err:.3g})")
    return QuadratureResult(value, err, leaves)


def integrate(f, iv, tol: float = FINITE_TOL) -> QuadratureResult:
    """Integral of ``f`` over ``iv`` to absolute tolerance ``tol``.

    >>> round(integrate("x^2", (0, 1)).value, 12)
    0.333333333333
    """
    expr = _expr(f)
    iv = Interval.of(iv)
    a, b = iv.a, iv.b
    sing_a = not math.isfinite(expr(a))
    sing_b = not math.isfinite(expr(b))
    if not (sing_a or sing_b):
        return _simpson(expr, a, b, tol)
    return _guarded(expr, a, b, tol, sing_a, sing_b)


def _guarded(expr, a, b, tol, sing_a, sing_b) -> QuadratureResult:
    h = b - a
    delta = h / 8.0
    share = tol / (4.0 * MAX_HALVINGS)  # at most MAX_HALVINGS pieces: together under tol/4
    lo = a + delta if sing_a else a
    hi = b - delta if sing_b else b
    core = _simpson(expr, lo, hi, tol / 2.0)
    total = core.value
    error = core.error_estimate
    pieces = core.subdivisions
    prev_est = prev_inc = None
    for _ in range(MAX_HALVINGS):
        half = 0.5 * delta
        if (sing_a and a + half == a) or (sing_b and b - half == b):
            break
        inc = 0.0
        if sing_a:
            r = _simpson(expr, a + half, a + delta, share)
            inc += r.value
            error += r.error_estimate
            pieces += r.subdivisions
        if sing_b:
            r = _simpson(expr, b - delta, b - half, share)
            inc += r.value
            error += r.error_estimate
            pieces += r.subdivisions
        total += inc
        tail = 0.0
        if prev_inc:
            ratio = inc / prev_inc
            if 0.0 < ratio < 1.0:
                tail = inc * ratio / (1.0 - ratio)
        est = total + tail
        if prev_est is not None and abs(est - prev_est) < tol / 4.0:
            return QuadratureResult(est, error + abs(est - prev_est), pieces)
        prev_est, prev_inc = est, inc
        delta = half
    raise QuadratureError(f"endpoint singularity of {expr} on [{a}, {b}] did not settle")


def integrate_half_line(f, tol: float = HALF_LINE_TOL, start: float = 0.0) -> QuadratureResult:
    """Integral of ``f`` over [start, inf).

    Panels of width w, w, 2w, 4w, ... with ``w = max(1, |start|)``. The loop stops once the
    last panel and the geometric extrapolation of the remaining ones are both
    below ``tol/2``; the extrapolated tail is added to the value.
    """
    expr = _expr(f)
    width = max(1.0, abs(start))
    first = integrate(expr, (start, start + width), tol / 4.0)
    total = first.value
    error = first.error_estimate
    pieces = first.subdivisions
    lo = start + width
    prev = abs(first.value)
    stalled = 0
    for k in range(MAX_PANELS):
        hi = lo + width
        r = _simpson(expr, lo, hi, tol * 2.0 ** -(k + 3))
        total += r.value
        error += r.error_estimate
        pieces += r.subdivisions
        c = abs(r.value)
        ratio = c / prev if prev > 0 else 0.0
        stalled = stalled + 1 if ratio >= 0.95 and c > 0 else 0
        if stalled >= STALL_PANELS:
            raise DivergenceError(f"integral of {expr} over [{start}, inf) diverges: panel contributions not decreasing")
        if ratio < 1.0:
            tail = r.value * ratio / (1.0 - ratio)
            if c < tol / 2.0 and abs(tail) < tol / 2.0 and k >= 1:
                return QuadratureResult(total + tail, error + abs(tail), pieces)
        prev = c
        lo, width = hi, 2.0 * width
    raise DivergenceError(f"integral of {expr} over [{start}, inf) did not converge")


def sum_series(g, offset: float = 0.0, tol: float = SERIES_TOL) -> float:
    """``sum_{k>=1} g(k - offset)`` for positive decreasing summable ``g``."""
    if offset not in (0.0, 0.5):
        raise ValueError("offset must be 0 or 1/2")
    expr = _expr(g)
    n = 64
    while n <= 1 << 22:
        xs = np.arange(1, n + 1, dtype=float) - offset
        t = expr.values(xs)
        if (t <= 0).any():
            raise QuadratureError(f"series terms of {expr} must be positive")
        if (np.diff(t) > 1e-14 * t[1:]).any():
            raise QuadratureError(f"series terms of {expr} are not non-increasing")
        partial = math.fsum(t)
        ratios = t[-8:][1:] / t[-8:][:-1]
        ratio = float(ratios.max())
        if ratio < 0.9:
            bound = float(t[-1]) * ratio / (1.0 - ratio)
            if bound < tol:
                return float(partial + bound)
        elif n >= 64:
            tail, err = _em_tail(expr, n + 1 - offset, tol)
            if err < tol:
                return float(partial + tail)
        n *= 4
    raise QuadratureError(f"tail bound for the series of {expr} fails to close")


def _em_tail(expr: Expression, x0: float, tol: float) -> tuple[float, float]:
    """``sum_{j>=0} g(x0 + j)`` by Euler-Maclaurin through the g''' term."""
    integral = integrate_half_line(expr, tol / 4.0, start=x0)
    g0, g1, _, g3 = eval_jets(expr, [x0], 3)[:, 0]
    tail = integral.value + g0 / 2.0 - g1 / 12.0 + g3 / 720.0
    err = abs(g3) / 720.0 + integral.error_estimate
    upper = integral.value + float(expr.value(x0 - 1.0))
    if not (integral.value - err <= tail <= upper + err):
        raise QuadratureError(f"tail bound for the series of {expr} fails to close")
    return tail, err


# --------------------------------------------------------------------------
# seeded generators

FAMILIES = ("convex_f", "convex_fprime", "convex_fsecond", "concave_convex_split", "convex_decreasing")


def trial_rng(seed: int, *keys: int) -> np.random.Generator:
    """Counter-based generator keyed by ``(seed, *keys)``; independent of call order."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), *map(int, keys)])))


def _interval(rng, max_len: float = 1.25) -> Interval:
    length = rng.uniform(0.25, max_len)
    a = rng.uniform(-1.5, 1.5 - length)
    return Interval(round(a, 6), round(a + length, 6))


def _r(v: float) -> float:
    return round(float(v), 6)


def _terms(rng, iv: Interval):
    """Coefficients of the convex basis q(x-s)^2, e^{lx}, e^{-mx}, c(x-t)^4."""
    s = _r(rng.uniform(iv.a, iv.b))
    t = _r(rng.uniform(iv.a, iv.b))
    q = _r(rng.uniform(0.5, 2.0))
    ce = _r(rng.uniform(0.0, 1.0)) if rng.random() < 0.5 else 0.0
    cm = _r(rng.uniform(0.0, 1.0)) if rng.random() < 0.5 else 0.0
    c4 = _r(rng.uniform(0.0, 0.2)) if rng.random() < 0.5 else 0.0
    lam = _r(rng.uniform(0.2, 1.5))
    mu = _r(rng.uniform(0.2, 1.5))
    return s, t, q, ce, cm, c4, lam, mu


def _sum(parts) -> Expression:
    out = None
    for p in parts:
        out = p if out is None else out + p
    return out


def random_convex(seed: int, family: str = "convex_f", index: int = 0, positive: bool = False) -> FunctionSpec:
    """Random function, convex at the level ``family`` asks for, by construction.

    ``convex_f``: f convex (a dominant quadratic plus exponentials and a
    quartic, plus an affine part). ``convex_fprime`` / ``convex_fsecond``:
    the same basis integrated once / twice, plus a free polynomial of degree
    2 / 3. ``concave_convex_split``: f' = k(x-c)^3 + k2 sinh(l(x-c)) + affine
    around an interior c. ``convex_decreasing``: positive, convex and
    decreasing on [0, inf). ``positive`` keeps convex_f strictly positive.
    """
    if family not in FAMILIES:
        raise ValueError(f"unknown family {family!r}")
    rng = trial_rng(seed, FAMILIES.index(family), index)
    prov = Generated(int(seed), int(index), family)
    if family == "convex_decreasing":
        return FunctionSpec(_decreasing(rng), HalfLine(), prov)
    iv = _interval(rng)
    if family == "concave_convex_split":
        return FunctionSpec(_split(rng, iv), iv, prov)
    s, t, q, ce, cm, c4, lam, mu = _terms(rng, iv)
    alpha, beta, gamma, delta = (_r(v) for v in rng.uniform(-1.0, 1.0, 4))
    exp_l = call("exp", lam * X)
    exp_m = call("exp", -mu * X)
    if family == "convex_f":
        parts = [q * (X - s) ** 2]
        parts += [ce * exp_l] if ce else []
        parts += [cm * exp_m] if cm else []
        parts += [c4 * (X - t) ** 4] if c4 else []
        if positive:
            parts.append(Expression.of(_r(rng.uniform(0.1, 1.0))))
        else:
            parts.append(alpha * X + beta)
    elif family == "convex_fprime":
        parts = [_r(q / 3) * (X - s) ** 3]
        parts += [_r(ce / lam) * exp_l] if ce else []
        parts += [-_r(cm / mu) * exp_m] if cm else []
        parts += [_r(c4 / 5) * (X - t) ** 5] if c4 else []
        parts.append(_r(alpha / 2) * X**2 + beta * X + gamma)
    else:  # convex_fsecond
        parts = [_r(q / 12) * (X - s) ** 4]
        parts += [_r(ce / lam**2) * exp_l] if ce else []
        parts += [_r(cm / mu**2) * exp_m] if cm else []
        parts += [_r(c4 / 30) * (X - t) ** 6] if c4 else []
        parts.append(_r(alpha / 6) * X**3 + _r(beta / 2) * X**2 + gamma * X + delta)
    return FunctionSpec(_sum(parts), iv, prov)


def _split(rng, iv: Interval) -> Expression:
    c = _r(rng.uniform(iv.a + 0.15 * iv.length, iv.b - 0.15 * iv.length))
    k = _r(rng.uniform(0.2, 2.0))
    k2 = _r(rng.uniform(0.0, 1.0)) if rng.random() < 0.5 else 0.0
    lam = _r(rng.uniform(0.5, 2.0))
    alpha, beta, gamma = (_r(v) for v in rng.uniform(-1.0, 1.0, 3))
    u = X - c
    parts = [_r(k / 4) * u**4]
    if k2:
        parts.append(_r(k2 / (2 * lam)) * (call("exp", lam * u) + call("exp", -lam * u)))
    parts.append(_r(alpha / 2) * X**2 + beta * X + gamma)
    return _sum(parts)


def _decreasing(rng) -> Expression:
    parts = []
    while not parts:
        if rng.random() < 0.7:
            parts.append(_r(rng.uniform(0.2, 2.0)) * call("exp", -_r(rng.uniform(0.3, 2.0)) * X))
        if rng.random() < 0.5:
            m = int(rng.integers(2, 4))
            parts.append(_r(rng.uniform(0.2, 2.0)) * (1 + _r(rng.uniform(0.3, 2.0)) * X) ** (-m))
    return _sum(parts)


__all__ = [
    "HalfLine",
    "Generated",
    "FunctionSpec",
    "QuadratureResult",
    "as_spec",
    "integrate",
    "integrate_half_line",
    "sum_series",
    "random_convex",
    "trial_rng",
    "FAMILIES",
]
