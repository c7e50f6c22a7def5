"""Pure-Python kernel: numpy stack machine and breadth-first adaptive Simpson.

Each interval is accepted or split by a rule that only looks at the interval
itself (its Simpson estimates, its depth, and its share ``tol * h / (b - a)``
of the tolerance), so the set of leaves is the same as in the recursive
compiled kernel; only the summation order differs.
"""

from __future__ import annotations

import math

import numpy as np

from convex_bounds.expr import (
    OP_ADD,
    OP_CONST,
    OP_COS,
    OP_DIV,
    OP_EXP,
    OP_LN,
    OP_MUL,
    OP_NEG,
    OP_POW,
    OP_POWI,
    OP_SIN,
    OP_SQRT,
    OP_SUB,
    OP_VAR,
)

MIN_DEPTH = 3
ROUNDING = 128 * np.finfo(float).eps

_UNARY = {OP_EXP: np.exp, OP_LN: np.log, OP_SQRT: np.sqrt, OP_SIN: np.sin, OP_COS: np.cos}
_BINARY = {OP_ADD: np.add, OP_SUB: np.subtract, OP_MUL: np.multiply, OP_DIV: np.divide, OP_POW: np.power}


def eval_points(program, xs: np.ndarray) -> np.ndarray:
    xs = np.asarray(xs, dtype=float)
    stack = []
    with np.errstate(all="ignore"):
        for op, arg in zip(program.ops.tolist(), program.args.tolist()):
            if op == OP_CONST:
                stack.append(arg)  # scalars broadcast; saves an array per constant
            elif op == OP_VAR:
                stack.append(xs)
            elif op == OP_NEG:
                stack[-1] = -stack[-1]
            elif op == OP_POWI:
                stack[-1] = np.power(stack[-1], arg)
            elif op in _UNARY:
                stack[-1] = _UNARY[op](stack[-1])
            else:
                rhs = stack.pop()
                stack[-1] = _BINARY[op](stack[-1], rhs)
    out = stack[0]
    if np.ndim(out) == 0:
        return np.full(xs.shape, float(out))
    return out


def eval_point(program, x: float) -> float:
    return float(eval_points(program, np.array([x]))[0])


def simpson(program, a: float, b: float, tol: float, max_depth: int = 50, max_leaves: int = 200_000):
    """Adaptive Simpson on [a, b]; returns ``(value, error, leaves, status)``.

    status 0: converged; 1: non-finite sample; 2: depth/leaf budget exhausted.
    """
    fa, fm, fb = eval_points(program, np.array([a, 0.5 * (a + b), b]))
    if not (math.isfinite(fa) and math.isfinite(fm) and math.isfinite(fb)):
        return math.nan, math.inf, 0, 1
    # one column per open interval: lo, hi, f(lo), f(mid), f(hi), Simpson estimate, tolerance share
    LO, HI, FL, FM, FH, WH, EPS = range(7)
    st = np.array([[a], [b], [fa], [fm], [fb], [(b - a) / 6.0 * (fa + 4.0 * fm + fb)], [tol]])
    value = 0.0
    error = 0.0
    leaves = 0
    status = 0
    depth = 0
    while True:
        n = st.shape[1]
        mid = 0.5 * (st[LO] + st[HI])
        f13 = eval_points(program, np.concatenate([0.5 * (st[LO] + mid), 0.5 * (mid + st[HI])]))
        if not np.isfinite(f13).all():
            return math.nan, math.inf, leaves, 1
        f_q1, f_q3 = f13[:n], f13[n:]
        h12 = (st[HI] - st[LO]) / 12.0
        left = h12 * (st[FL] + 4.0 * f_q1 + st[FM])
        right = h12 * (st[FM] + 4.0 * f_q3 + st[FH])
        delta = left + right - st[WH]
        ad = np.abs(delta)
        if depth < MIN_DEPTH:
            ok = np.zeros(n, dtype=bool)
        else:
            ok = ad <= 15.0 * st[EPS]
            rest = ~ok
            if rest.any():
                scale = h12[rest] * (
                    np.abs(st[FL, rest]) + 4.0 * np.abs(f_q1[rest]) + 2.0 * np.abs(st[FM, rest]) + 4.0 * np.abs(f_q3[rest]) + np.abs(st[FH, rest])
                )
                ok[rest] = ad[rest] <= ROUNDING * scale
        n_open = n - int(np.count_nonzero(ok))
        if depth >= max_depth or leaves + 2 * n_open > max_leaves:
            if n_open:
                status = 2
            ok[:] = True
            n_open = 0
        if n_open < n:
            value += float(np.sum(left[ok] + right[ok] + delta[ok] / 15.0))
            error += float(np.sum(ad[ok])) / 15.0
            leaves += n - n_open
        if not n_open:
            break
        keep = ~ok
        old = st[:, keep]
        k = old.shape[1]
        st = np.concatenate([old, old], axis=1)
        m = mid[keep]
        st[HI, :k] = m
        st[LO, k:] = m
        st[FH, :k] = old[FM]
        st[FL, k:] = old[FM]
        st[FM, :k] = f_q1[keep]
        st[FM, k:] = f_q3[keep]
        st[WH, :k] = left[keep]
        st[WH, k:] = right[keep]
        st[EPS] *= 0.5
        depth += 1
    return value, error, leaves, status
