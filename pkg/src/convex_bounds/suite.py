"""Randomised verification of every inequality against the seeded generators.

Trial t of inequality i draws its functions from ``random_convex(seed, family, index)``
and any extra parameters from ``trial_rng(seed, CHECK_KEY, i, t)``, so each row
depends on (seed, inequality, trial) only and any fan-out gives the same rows.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from convex_bounds import deriv_bounds as db
from convex_bounds import hh as hc
from convex_bounds import lp_hardy as lp
from convex_bounds.convexity import certify
from convex_bounds.errors import ConvexBoundsError, PreconditionError
from convex_bounds.expr import X, Expression
from convex_bounds.quadrature import random_convex, trial_rng
from convex_bounds.report import PASS, PRECONDITION, ReportRow

CHECK_KEY = 1000
COUNTEREXAMPLE = ("x^2*(2-x)^2", (0.0, 2.0))
INF = math.inf


def _convex(seed, t, j=0, positive=False):
    return random_convex(seed, "convex_f", 8 * t + j, positive=positive)


def _hh(seed, t, rng):
    f = _convex(seed, t)
    return f, f.domain, tuple(hc.hh(f, f.domain))


def _reflection(seed, t, rng):
    f = _convex(seed, t)
    iv = f.domain
    return f, iv, (0.0, hc.reflection_gap(f, iv, float(rng.uniform(iv.a, iv.b))), INF)


def _fejer(seed, t, rng):
    f = _convex(seed, t)
    iv = f.domain
    c0, c1, c2 = (round(float(v), 6) for v in rng.uniform(0.0, 1.0, 3))
    d = (X - iv.midpoint) ** 2
    g = (c0 + 0.1) + c1 * d + c2 * d**2
    lhs, rhs = hc.fejer_upper(f, g, iv)
    return f, iv, (-INF, lhs, rhs)


def _riemann(seed, t, rng):
    f = _convex(seed, t)
    return f, f.domain, tuple(hc.riemann_sandwich(f, f.domain, int(rng.integers(1, 51))))


def _refined(seed, t, rng):
    f = _convex(seed, t)
    return f, f.domain, tuple(hc.refined_rhh(f, f.domain))


def _series(variant):
    def check(seed, t, rng):
        f = random_convex(seed, "convex_decreasing", t)
        return f, (0.0, INF), tuple(hc.series_sandwich(f, variant))

    return check


def _hardy(seed, t, rng):
    f = random_convex(seed, "convex_decreasing", t)
    p = round(float(rng.uniform(1.2, 8.0)), 6)
    alpha = round(1.0 / p + float(rng.uniform(0.15, 0.95)), 6)
    return f, (0.0, INF), tuple(lp.hardy_ratio(f, lp.HardyParams(alpha, p)))


def _positives(seed, t, n):
    us = [_convex(seed, t, j, positive=True) for j in range(n)]
    return us, us[0].domain


def _label(us) -> str:
    return " ; ".join(u.text for u in us)


def _holder(seed, t, rng):
    us, iv = _positives(seed, t, int(rng.integers(2, 5)))
    lhs, rhs = lp.holder_product_check(us, iv)
    return _label(us), iv, (-INF, lhs, rhs)


def _power(seed, t, rng):
    (u,), iv = _positives(seed, t, 1)
    n = int(rng.integers(2, 5))
    cert = lp.power_convexity(u, n, iv)
    return f"({u.text})^{n}", iv, (-INF, cert.max_violation, cert.tolerance)


def _product(seed, t, rng):
    us, iv = _positives(seed, t, int(rng.integers(2, 4)))
    lhs, rhs = lp.product_bound(us, iv)
    return _label(us), iv, (-INF, lhs, rhs)


def _ion(seed, t, rng):
    (u, v), iv = _positives(seed, t, 2)
    p = float(rng.uniform(1.1, 5.0))
    lhs, rhs = lp.ion_bound(u, v, p, p / (p - 1.0), iv)
    return _label([u, v]), iv, (-INF, lhs, rhs)


def _inflection(seed, t, rng):
    f = random_convex(seed, "concave_convex_split", t)
    rep, _ = db.inflection_hadamard(f, f.domain)
    return f, f.domain, tuple(rep.enclosure())


def _gap(family, engine):
    def check(seed, t, rng):
        f = random_convex(seed, family, t)
        return f, f.domain, tuple(engine(f, f.domain).enclosure())

    return check


def _log_mean(seed, t, rng):
    a = round(float(rng.uniform(0.05, 5.0)), 6)
    b = round(a + float(rng.uniform(0.0, 5.0)), 6)
    lhs, mid, amgm = db.log_mean_bound(a, b)
    return "log-mean", (a, b), (lhs, mid, amgm)


CHECKS = {
    "HH": _hh,
    "2.1": _reflection,
    "fejer": _fejer,
    "2.2": _riemann,
    "2.5": _refined,
    "2.9": _series("eq29"),
    "2.10": _series("eq210"),
    "3.1": _hardy,
    "3.6": _holder,
    "L3.2": _power,
    "3.7": _product,
    "ion": _ion,
    "4.1": _inflection,
    "5.1": _gap("convex_fprime", db.moment_enclosure),
    "5.3": _gap("convex_fsecond", db.trapezoid_gap_enclosure),
    "5.5": _gap("convex_fprime", db.mean_enclosure_endpoint),
    "5.6": _gap("convex_fprime", db.mean_enclosure_midpoint),
    "5.7": _gap("convex_fprime", db.half_interval_gap),
    "5.14": _log_mean,
}
IDS = tuple(CHECKS)


def _text(f) -> str:
    if isinstance(f, str):
        return f
    return str(getattr(f, "expression", f))


def run_check(inequality_id: str, seed: int, trial: int, tol: float = 1e-8) -> ReportRow:
    """One row: inequality ``inequality_id`` on trial ``trial``; failures become statuses."""
    rng = trial_rng(seed, CHECK_KEY, IDS.index(inequality_id), trial)
    try:
        f, iv, (lower, value, upper) = CHECKS[inequality_id](seed, trial, rng)
    except (PreconditionError, ConvexBoundsError, ArithmeticError) as exc:
        return ReportRow.precondition(inequality_id, f"trial {trial}", math.nan, math.nan, str(exc))
    a, b = iv
    return ReportRow.judged(inequality_id, _text(f), a, b, lower, value, upper, tol)


def _run_block(args) -> list[ReportRow]:
    inequality_id, seed, trials, tol = args
    return [run_check(inequality_id, seed, t, tol) for t in range(trials)]


def counterexample() -> dict:
    """The non-convex product x^2 (2-x)^2 of two convex factors, certified on [0, 2]."""
    text, iv = COUNTEREXAMPLE
    cert = certify(Expression.of(text), 0, iv)
    return {
        "function": text,
        "a": iv[0],
        "b": iv[1],
        "verdict": cert.verdict.value,
        "witness": list(cert.witness) if cert.witness else None,
        "flagged": cert.verdict.value == "Neither",
    }


def summarize(rows, tol: float) -> dict:
    per = {}
    for i in IDS:
        per[i] = {"trials": 0, "passed": 0, "failed": 0, "precondition_failed": 0, "max_violation": 0.0}
    for r in rows:
        s = per[r.inequality_id]
        s["trials"] += 1
        if r.status == PASS:
            s["passed"] += 1
        elif r.status == PRECONDITION:
            s["precondition_failed"] += 1
        else:
            s["failed"] += 1
        if r.status != PRECONDITION:
            v = max(-r.slack_lower, -r.slack_upper, 0.0)
            s["max_violation"] = max(s["max_violation"], v)
    return {
        "tolerance": tol,
        "inequalities": per,
        "violations": sum(s["failed"] for s in per.values()),
        "precondition_failures": sum(s["precondition_failed"] for s in per.values()),
        "counterexample": counterexample(),
    }


def verify_suite(trials: int, seed: int, tol: float = 1e-8, jobs: int = 1, ids=IDS) -> tuple[list[ReportRow], dict]:
    """Run every inequality ``trials`` times; rows come back in (inequality, trial) order."""
    if trials < 1:
        raise ValueError(f"trials must be at least 1, got {trials}")
    tasks = [(i, seed, trials, tol) for i in ids]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            blocks = list(pool.map(_run_block, tasks))
    else:
        blocks = [_run_block(t) for t in tasks]
    rows = [r for block in blocks for r in block]
    return rows, summarize(rows, tol)


__all__ = ["IDS", "CHECKS", "run_check", "verify_suite", "summarize", "counterexample"]
