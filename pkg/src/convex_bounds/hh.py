"""Hermite-Hadamard type sandwiches for a convex f.

Every engine certifies convexity first, then returns an :class:`Enclosure`
(or a :class:`Comparison` for one-sided bounds). Unless an engine defines its
own middle quantity, ``Enclosure.value`` is the quadrature oracle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from convex_bounds.convexity import Interval, require_convex
from convex_bounds.errors import NegativeWeight, NotPositive, ParameterError, PreconditionError, SymmetryViolated, TargetNotReached
from convex_bounds.expr import X, Expression, call, eval_jets
from convex_bounds.quadrature import FINITE_TOL, as_spec, integrate, integrate_half_line, sum_series

TOL = 1e-8
SERIES_WINDOW = (0.0, 32.0)
SERIES_ORACLE_TOL = 1e-11
MAX_COMPOSITE_DEPTH = 24


@dataclass(frozen=True)
class Enclosure:
    lower: float
    value: float
    upper: float

    @property
    def slack_lower(self) -> float:
        return self.value - self.lower

    @property
    def slack_upper(self) -> float:
        return self.upper - self.value

    @property
    def width(self) -> float:
        return self.upper - self.lower

    def holds(self, tol: float = TOL) -> bool:
        return self.slack_lower >= -tol and self.slack_upper >= -tol

    def __contains__(self, x) -> bool:
        return self.lower <= x <= self.upper

    def __iter__(self):
        yield self.lower
        yield self.value
        yield self.upper


class Comparison(NamedTuple):
    """A one-sided bound ``lhs <= rhs``."""

    lhs: float
    rhs: float

    @property
    def slack(self) -> float:
        return self.rhs - self.lhs

    def holds(self, tol: float = TOL) -> bool:
        return self.slack >= -tol


def _mean(expr: Expression, iv: Interval, tol: float = FINITE_TOL) -> float:
    return integrate(expr, iv, tol * iv.length).value / iv.length


def _shifted(c: float) -> Expression:
    """``x - c`` without a double negative in the text."""
    return X - c if c >= 0 else X + (-c)


def hh(f, iv) -> Enclosure:
    """``f(mid) <= mean of f <= (f(a)+f(b))/2``.

    >>> hh("x^2", (0, 1))
    Enclosure(lower=0.25, value=0.3333333333333333, upper=0.5)
    """
    spec = as_spec(f)
    iv = Interval.of(iv)
    require_convex(spec, 0, iv)
    e = spec.expression
    return Enclosure(e.value(iv.midpoint), _mean(e, iv), 0.5 * (e.value(iv.a) + e.value(iv.b)))


def reflection_gap(f, iv, x: float) -> float:
    """``f(a) + f(b) - f(a+b-x) - f(x)``, nonnegative for convex f."""
    spec = as_spec(f)
    iv = Interval.of(iv)
    if x not in iv:
        raise ParameterError(f"x={x!r} outside [{iv.a}, {iv.b}]")
    require_convex(spec, 0, iv)
    e = spec.expression
    return math.fsum([e.value(iv.a), e.value(iv.b), -e.value(iv.a + iv.b - x), -e.value(x)])


def riemann_sandwich(f, iv, n: int) -> Enclosure:
    """Right Riemann sum of order n between a shifted midpoint value and a weighted endpoint average."""
    if n < 1:
        raise ParameterError(f"n must be at least 1, got {n}")
    spec = as_spec(f)
    iv = Interval.of(iv)
    require_convex(spec, 0, iv)
    e = spec.expression
    a, b = iv
    r = 1.0 / n
    nodes = a + np.arange(1, n + 1) * (iv.length / n)
    nodes[-1] = b
    lower = e.value(0.5 * ((1 - r) * a + (1 + r) * b))
    value = math.fsum(e.values(nodes)) / n
    upper = 0.5 * (e.value(a) * (1 - r) + e.value(b) * (1 + r))
    return Enclosure(lower, value, upper)


def log_weight(iv) -> Expression:
    """``ln((b-a)^2 / ((b-x)(x-a))) - 1`` as an expression."""
    iv = Interval.of(iv)
    a, b = iv
    return 2.0 * math.log(iv.length) - call("ln", b - X) - call("ln", _shifted(a)) - 1.0


def refined_rhh(f, iv) -> Enclosure:
    """mean of f <= mean of f times the log weight <= (f(a)+f(b))/2."""
    spec = as_spec(f)
    iv = Interval.of(iv)
    require_convex(spec, 0, iv)
    e = spec.expression
    weighted = integrate(e * log_weight(iv), iv, FINITE_TOL * iv.length).value / iv.length
    return Enclosure(_mean(e, iv), weighted, 0.5 * (e.value(iv.a) + e.value(iv.b)))


def _check_weight(g: Expression, iv: Interval, tol: float, grid: int = 257) -> None:
    xs = iv.grid(grid)
    gx = g.values(xs)
    neg = int(np.argmin(gx))
    if gx[neg] < -tol:
        raise NegativeWeight(float(xs[neg]), float(gx[neg]))
    defect = np.abs(g.values(iv.a + iv.b - xs) - gx)
    worst = int(np.argmax(defect))
    if defect[worst] > tol:
        raise SymmetryViolated(float(xs[worst]), float(defect[worst]))


def fejer_upper(f, g, iv, tol: float = TOL) -> Comparison:
    """``int f g <= (f(a)+f(b))/2 * int g`` for g >= 0 symmetric about the midpoint."""
    spec, weight = as_spec(f), as_spec(g)
    iv = Interval.of(iv)
    _check_weight(weight.expression, iv, tol)
    require_convex(spec, 0, iv)
    e, w = spec.expression, weight.expression
    lhs = integrate(e * w, iv).value
    rhs = 0.5 * (e.value(iv.a) + e.value(iv.b)) * integrate(w, iv).value
    return Comparison(lhs, rhs)


def hh_levels(f, iv, max_depth: int) -> list[Enclosure]:
    """Composite enclosures on uniform bisection trees of depth 0..max_depth."""
    if not 0 <= max_depth <= MAX_COMPOSITE_DEPTH:
        raise ParameterError(f"max_depth must be in [0, {MAX_COMPOSITE_DEPTH}], got {max_depth}")
    spec = as_spec(f)
    iv = Interval.of(iv)
    require_convex(spec, 0, iv)
    e = spec.expression
    mean = _mean(e, iv)
    # level d uses the even samples of the 2^(d+1) grid as ends and the odd ones as midpoints
    fine = e.values(np.linspace(iv.a, iv.b, 2 ** (max_depth + 1) + 1))
    out = []
    for d in range(max_depth + 1):
        step = 2 ** (max_depth - d)
        ends = fine[:: 2 * step]
        mids = fine[step :: 2 * step]
        lower = math.fsum(mids) / mids.size
        upper = math.fsum(0.5 * (ends[:-1] + ends[1:])) / mids.size
        out.append(Enclosure(lower, mean, upper))
    return out


def composite_hh(f, iv, target_gap: float, max_depth: int = 16) -> Enclosure:
    """Bisect uniformly until ``upper - lower <= target_gap``.

    Raises :class:`TargetNotReached` with the gap achieved at ``max_depth``.
    """
    levels = hh_levels(f, iv, max_depth)
    for enc in levels:
        if enc.width <= target_gap:
            return enc
    last = levels[-1]
    raise TargetNotReached(last.width, max_depth, last)


def _check_series_input(e: Expression) -> None:
    window = Interval(*SERIES_WINDOW)
    require_convex(e, 0, window)
    xs = window.grid(257)
    jets = eval_jets(e, xs, 1)
    bad = int(np.argmin(jets[0]))
    if jets[0][bad] <= 0:
        raise NotPositive(float(xs[bad]), float(jets[0][bad]))
    up = int(np.argmax(jets[1]))
    if jets[1][up] > 0:
        raise PreconditionError(f"f must be decreasing, f'({xs[up]!r}) = {jets[1][up]:.3g}")


def series_sandwich(f, variant: str = "eq29") -> Enclosure:
    """Integral of f over [0, inf) between sums of f at integers or half-integers.

    ``eq29``: (sum f(k-1/2), f(0)/2 + sum f(k)); ``eq210``: (sum f(k), f(0) + sum f(k)).
    The middle is the half-line quadrature oracle.
    """
    if variant not in ("eq29", "eq210"):
        raise ParameterError(f"variant must be eq29 or eq210, got {variant!r}")
    e = as_spec(f).expression
    _check_series_input(e)
    value = integrate_half_line(e, SERIES_ORACLE_TOL).value
    f0 = e.value(0.0)
    whole = sum_series(e, 0.0)
    if variant == "eq29":
        return Enclosure(sum_series(e, 0.5), value, 0.5 * f0 + whole)
    return Enclosure(whole, value, f0 + whole)


__all__ = [
    "TOL",
    "Enclosure",
    "Comparison",
    "hh",
    "reflection_gap",
    "riemann_sandwich",
    "log_weight",
    "refined_rhh",
    "fejer_upper",
    "hh_levels",
    "composite_hh",
    "series_sandwich",
]
