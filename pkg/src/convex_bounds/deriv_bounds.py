"""Bounds that use endpoint derivatives: inflection split, first moment, trapezoid gap,
mean-value enclosures, half-interval gap and the log-mean inequality.

Endpoint derivatives come from jets, never from finite differences. Affine
certificates are accepted wherever convexity of f' or f'' is required.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

from convex_bounds.convexity import Interval, check_split, find_split, require_convex
from convex_bounds.errors import ParameterError
from convex_bounds.expr import X, Expression, eval_jet
from convex_bounds.hh import TOL, Enclosure
from convex_bounds.quadrature import FINITE_TOL, as_spec, integrate


@dataclass(frozen=True)
class GapReport:
    """``lower <= gap <= bound``; one-sided reports have ``lower = -inf``."""

    gap: float
    bound: float
    lower: float = -math.inf

    @property
    def slack(self) -> float:
        return self.bound - self.gap

    @property
    def slack_lower(self) -> float:
        return self.gap - self.lower

    @property
    def two_sided(self) -> bool:
        return self.lower > -math.inf

    def holds(self, tol: float = TOL) -> bool:
        return self.slack >= -tol and self.slack_lower >= -tol

    def enclosure(self) -> Enclosure:
        return Enclosure(self.lower, self.gap, self.bound)


class InflectionReport(NamedTuple):
    report: GapReport
    c: float


def _jets(e: Expression, iv: Interval, order: int):
    return eval_jet(e, iv.a, order), eval_jet(e, iv.b, order)


def _integral(e: Expression, a: float, b: float) -> float:
    return integrate(e, (a, b), FINITE_TOL * (b - a)).value


def _prepare(f, iv, level: int) -> tuple[Expression, Interval]:
    e = as_spec(f).expression
    iv = Interval.of(iv)
    require_convex(e, level, iv)
    return e, iv


def inflection_bound(f, iv, c: float) -> float:
    """Right side of the inflection bound for a given split point."""
    e = as_spec(f).expression
    a, b = Interval.of(iv)
    fa, fb, fc = (eval_jet(e, x, 1)[1] for x in (a, b, c))
    h = b - a
    return ((b - c) ** 2 / h * fb - (c - a) ** 2 / h * fa + (0.5 * (a + b) - c) * fc) / 3.0


def inflection_hadamard(f, iv, c: float | None = None) -> InflectionReport:
    """Weighted endpoint value minus the mean, for f' concave on [a, c] and convex on [c, b].

    ``c=None`` locates the split; a supplied ``c`` is validated instead.
    """
    e = as_spec(f).expression
    iv = Interval.of(iv)
    c = find_split(e, iv) if c is None else check_split(e, iv, c)
    a, b = iv
    h = iv.length
    weighted = ((c - a) * e.value(a) + (b - c) * e.value(b)) / h
    gap = weighted - _integral(e, a, b) / h
    return InflectionReport(GapReport(gap, inflection_bound(e, iv, c)), c)


def moment_enclosure(f, iv) -> GapReport:
    """Bounds for the first moment of f about the midpoint, f' convex."""
    e, iv = _prepare(f, iv, 1)
    a, b = iv
    h = iv.length
    ja, jb = _jets(e, iv, 1)
    slopes = ja[1] + jb[1]
    lower = h**2 / 8.0 * (jb[0] - ja[0]) - h**3 / 48.0 * slopes
    upper = h**3 / 24.0 * slopes
    m = iv.midpoint
    moment = integrate(e * (X - m), iv, FINITE_TOL * h).value
    return GapReport(moment, upper, lower)


def trapezoid_gap_enclosure(f, iv) -> GapReport:
    """Bounds for ``(f(a)+f(b))/2 - mean``, f'' convex."""
    e, iv = _prepare(f, iv, 2)
    h = iv.length
    ja, jb = _jets(e, iv, 2)
    lower = h / 8.0 * (jb[1] - ja[1]) - h**2 / 48.0 * (ja[2] + jb[2])
    upper = h**2 / 24.0 * (ja[2] + jb[2])
    gap = 0.5 * (ja[0] + jb[0]) - _integral(e, iv.a, iv.b) / h
    return GapReport(gap, upper, lower)


def mean_enclosure_endpoint(f, iv) -> GapReport:
    """Mean of f between endpoint-derivative corrected averages, f' convex."""
    e, iv = _prepare(f, iv, 1)
    h = iv.length
    ja, jb = _jets(e, iv, 1)
    lower = (ja[0] + 2.0 * jb[0]) / 3.0 - jb[1] * h / 6.0
    upper = (jb[0] + 2.0 * ja[0]) / 3.0 + ja[1] * h / 6.0
    return GapReport(_integral(e, iv.a, iv.b) / h, upper, lower)


def mean_enclosure_midpoint(f, iv) -> GapReport:
    """Mean of f between bounds built from the half-interval integrals, f' convex."""
    e, iv = _prepare(f, iv, 1)
    a, b = iv
    h = iv.length
    m = iv.midpoint
    left, right = _integral(e, a, m), _integral(e, m, b)
    fm = e.value(m)
    lower = e.value(a) + 2.0 * fm - 4.0 / h * left
    upper = e.value(b) + 2.0 * fm - 4.0 / h * right
    return GapReport((left + right) / h, upper, lower)


def half_interval_gap(f, iv) -> GapReport:
    """Right-half integral minus left-half integral against ``(b-a)(f(b)-f(a))/4``."""
    e, iv = _prepare(f, iv, 1)
    a, b = iv
    m = iv.midpoint
    gap = _integral(e, m, b) - _integral(e, a, m)
    return GapReport(gap, iv.length * (e.value(b) - e.value(a)) / 4.0)


class LogMean(NamedTuple):
    lhs: float
    mid: float
    amgm: float

    def holds(self, tol: float = TOL) -> bool:
        return self.lhs <= self.mid + tol and self.mid <= self.amgm + tol


def log_mean_bound(a: float, b: float) -> LogMean:
    """``a^((3a+b)/(4(a+b))) b^((a+3b)/(4(a+b))) <= (a+b)/2 <= ((3a+b)a + (a+3b)b)/(4(a+b))``.

    ``a == b`` is accepted and gives three equal values.
    """
    a, b = float(a), float(b)
    if not (math.isfinite(a) and math.isfinite(b)):
        raise ParameterError(f"a and b must be finite, got a={a}, b={b}")
    if not a > 0:
        raise ParameterError(f"need a > 0, got a={a}")
    if a > b:
        raise ParameterError(f"need a <= b, got a={a}, b={b}")
    s = 4.0 * (a + b)
    lhs = math.exp((3 * a + b) / s * math.log(a) + (a + 3 * b) / s * math.log(b))
    return LogMean(lhs, 0.5 * (a + b), ((3 * a + b) * a + (a + 3 * b) * b) / s)


__all__ = [
    "GapReport",
    "InflectionReport",
    "inflection_bound",
    "inflection_hadamard",
    "moment_enclosure",
    "trapezoid_gap_enclosure",
    "mean_enclosure_endpoint",
    "mean_enclosure_midpoint",
    "half_interval_gap",
    "LogMean",
    "log_mean_bound",
]
