"""Grid certificates of convexity for f, f' or f'' and the concave/convex split of f'.

A certificate is evidence on a finite grid, not a proof. The pairwise
midpoint test ``g((x+y)/2) <= (g(x)+g(y))/2`` over all grid pairs decides the
verdict; the sign of the derivative two levels up is sampled alongside when
jets reach that far (levels 0 and 1) and recorded on the certificate.
"""

from __future__ import annotations

import enum
import functools
import math
from dataclasses import dataclass

import numpy as np

from convex_bounds.errors import ConvexityNotCertified, IntervalError, NoSuchSplit
from convex_bounds.expr import MAX_ORDER, Expression, eval_jets

DEFAULT_GRID = 257
REL_TOL = 1e-9


@dataclass(frozen=True)
class Interval:
    a: float
    b: float

    def __post_init__(self):
        a, b = float(self.a), float(self.b)
        if not (math.isfinite(a) and math.isfinite(b)):
            raise IntervalError(f"interval endpoints must be finite, got [{a}, {b}]")
        if not a < b:
            raise IntervalError(f"need a < b, got [{a}, {b}]")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    @classmethod
    def of(cls, iv) -> "Interval":
        if isinstance(iv, Interval):
            return iv
        a, b = iv
        return cls(a, b)

    @property
    def length(self) -> float:
        return self.b - self.a

    @property
    def midpoint(self) -> float:
        return 0.5 * (self.a + self.b)

    def __contains__(self, x) -> bool:
        return self.a <= x <= self.b

    def __iter__(self):
        yield self.a
        yield self.b

    def grid(self, n: int) -> np.ndarray:
        return np.linspace(self.a, self.b, n)


class Verdict(enum.Enum):
    CONVEX = "Convex"
    CONCAVE = "Concave"
    AFFINE = "Affine"
    NEITHER = "Neither"


@dataclass(frozen=True)
class ConvexityCertificate:
    target: int
    verdict: Verdict
    grid_size: int
    max_violation: float  # max over pairs of g(mid) - (g(x)+g(y))/2
    tolerance: float
    interval: Interval
    concavity_defect: float = 0.0  # same with the sign of g flipped
    witness: tuple[float, float] | None = None
    derivative_sign: str | None = None  # "positive", "negative", "zero", "mixed"

    @property
    def convex(self) -> bool:
        """Convex or affine: what every bound that needs convexity accepts."""
        return self.verdict in (Verdict.CONVEX, Verdict.AFFINE)

    @property
    def concave(self) -> bool:
        return self.verdict in (Verdict.CONCAVE, Verdict.AFFINE)


def _sign_summary(d: np.ndarray, tol: float) -> str:
    pos = bool((d > tol).any())
    neg = bool((d < -tol).any())
    if pos and neg:
        return "mixed"
    if pos:
        return "positive"
    if neg:
        return "negative"
    return "zero"


def certify(
    f: Expression,
    level: int,
    iv,
    grid: int = DEFAULT_GRID,
    tol: float | None = None,
) -> ConvexityCertificate:
    """Certify convexity/concavity of the ``level``-th derivative of ``f`` on ``iv``.

    ``tol`` defaults to ``1e-9 * (1 + max|g|)`` over the grid. A ``Neither``
    certificate carries the grid pair with the largest convexity defect.
    """
    if level not in (0, 1, 2):
        raise ValueError("level must be 0, 1 or 2")
    if grid < 16:
        raise ValueError("grid must have at least 16 points")
    f = getattr(f, "expression", f)
    f = Expression.of(f)
    iv = Interval.of(iv)
    # the half-step grid holds every pair midpoint: mid(i, j) = fine[i + j]
    fine = np.linspace(iv.a, iv.b, 2 * grid - 1)
    sign_order = level + 2
    order = sign_order if sign_order <= MAX_ORDER else level
    jets = eval_jets(f, fine, order)
    g_fine = jets[level]
    g = g_fine[::2]
    if tol is None:
        tol = REL_TOL * (1.0 + float(np.max(np.abs(g_fine))))

    idx = np.arange(grid)
    mids = g_fine[idx[:, None] + idx[None, :]]
    chord = 0.5 * (g[:, None] + g[None, :])
    defect = mids - chord  # zero on the diagonal
    flat = int(np.argmax(defect))
    conv = float(defect.flat[flat])
    conc = float(-defect.min())

    if conv <= tol and conc <= tol:
        verdict = Verdict.AFFINE
    elif conv <= tol:
        verdict = Verdict.CONVEX
    elif conc <= tol:
        verdict = Verdict.CONCAVE
    else:
        verdict = Verdict.NEITHER
    witness = None
    if verdict is Verdict.NEITHER:
        i, j = divmod(flat, grid)
        witness = (float(fine[2 * min(i, j)]), float(fine[2 * max(i, j)]))

    sign = None
    if order == sign_order:
        d = jets[sign_order]
        sign = _sign_summary(d, REL_TOL * (1.0 + float(np.max(np.abs(d)))))
    return ConvexityCertificate(
        target=level,
        verdict=verdict,
        grid_size=grid,
        max_violation=conv,
        tolerance=tol,
        interval=iv,
        concavity_defect=conc,
        witness=witness,
        derivative_sign=sign,
    )


def _third(f: Expression, x: float) -> float:
    return float(eval_jets(f, [x], 3)[3][0])


def find_split(f: Expression, iv, grid: int = DEFAULT_GRID, tol: float | None = None) -> float:
    """Point ``c`` with f' concave on [a, c] and convex on [c, b].

    Returns ``a`` when f' is convex throughout (including affine f') and ``b``
    when it is concave throughout. The sign change of f''' is located by
    bisection, seeded by a grid scan; ties go to the leftmost point.
    """
    f = getattr(f, "expression", f)
    f = Expression.of(f)
    iv = Interval.of(iv)
    xs = iv.grid(grid)
    d3 = eval_jets(f, xs, 3)[3]
    dead = tol if tol is not None else REL_TOL * (1.0 + float(np.max(np.abs(d3))))
    signs = np.where(d3 > dead, 1, np.where(d3 < -dead, -1, 0))
    nz = signs[signs != 0]
    if not (nz < 0).any():
        c = iv.a
    elif not (nz > 0).any():
        c = iv.b
    else:
        changes = int(np.count_nonzero(np.diff(nz)))
        if changes > 1 or nz[0] > 0:
            kind = "convex-then-concave" if changes == 1 else "oscillating"
            raise NoSuchSplit(f"f' is {kind} on [{iv.a}, {iv.b}]")
        last_neg = int(np.flatnonzero(signs < 0)[-1])
        first_pos = last_neg + int(np.argmax(signs[last_neg:] > 0))
        lo, hi = float(xs[last_neg]), float(xs[first_pos])
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if mid <= lo or mid >= hi:
                break
            if _third(f, mid) >= 0:
                hi = mid
            else:
                lo = mid
        c = hi
    _validate_split(f, iv, c, grid)
    return c


def _validate_split(f: Expression, iv: Interval, c: float, grid: int) -> None:
    span = 1e-9 * iv.length
    if c - iv.a > span:
        cert = certify(f, 1, (iv.a, c), grid)
        if not cert.concave:
            raise NoSuchSplit(f"f' not concave on [{iv.a}, {c}] ({cert.verdict.value})")
    if iv.b - c > span:
        cert = certify(f, 1, (c, iv.b), grid)
        if not cert.convex:
            raise NoSuchSplit(f"f' not convex on [{c}, {iv.b}] ({cert.verdict.value})")


@functools.lru_cache(maxsize=1024)
def _cached(expr: Expression, level: int, a: float, b: float, grid: int) -> ConvexityCertificate:
    return certify(expr, level, (a, b), grid)


def require_convex(f, level: int, iv, grid: int = DEFAULT_GRID) -> ConvexityCertificate:
    """Certificate for the ``level``-th derivative, or :class:`ConvexityNotCertified`.

    Affine counts as convex. Results are memoised per (expression, level, interval, grid).
    """
    iv = Interval.of(iv)
    cert = _cached(Expression.of(getattr(f, "expression", f)), level, iv.a, iv.b, grid)
    if not cert.convex:
        raise ConvexityNotCertified(cert)
    return cert


def check_split(f: Expression, iv, c: float, grid: int = DEFAULT_GRID) -> float:
    """Validate a user-supplied split point."""
    iv = Interval.of(iv)
    if not iv.a <= c <= iv.b:
        raise NoSuchSplit(f"split point {c} outside [{iv.a}, {iv.b}]")
    _validate_split(Expression.of(getattr(f, "expression", f)), iv, float(c), grid)
    return float(c)


__all__ = [
    "Interval",
    "Verdict",
    "ConvexityCertificate",
    "certify",
    "find_split",
    "check_split",
    "require_convex",
]
