"""Command-line front end.

Exit codes: 0 every row passes, 1 an inequality is violated, 2 a hypothesis
could not be certified, 3 usage or parse error. With several rows the exit
code is the largest one.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys

from convex_bounds import deriv_bounds as db
from convex_bounds import hh as hc
from convex_bounds import lp_hardy as lp
from convex_bounds.convexity import Interval, certify
from convex_bounds.errors import ConvexBoundsError, IntervalError, ParameterError, ParseError, PreconditionError
from convex_bounds.expr import parse
from convex_bounds.quadrature import FunctionSpec
from convex_bounds.report import EXIT_CODES, PRECONDITION, USAGE_EXIT, ReportRow, fmt, render, worst_exit
from convex_bounds.suite import verify_suite

DEFAULT_TOL = 1e-8
ENV_TOL = "CONVEX_BOUNDS_TOL"
INF = math.inf


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def default_tol() -> float:
    raw = os.environ.get(ENV_TOL)
    if raw is None:
        return DEFAULT_TOL
    try:
        tol = float(raw)
    except ValueError:
        raise UsageError(f"{ENV_TOL}={raw!r} is not a number") from None
    if not tol > 0:
        raise UsageError(f"{ENV_TOL} must be positive")
    return tol


def _common() -> argparse.ArgumentParser:
    p = _Parser(add_help=False)
    p.add_argument("-f", dest="functions", action="append", metavar="EXPR", help="function of x (repeat for products)")
    p.add_argument("-a", "--a", dest="a", type=float)
    p.add_argument("-b", "--b", dest="b", type=float)
    p.add_argument("--tol", type=float, default=None, help=f"tolerance (default {DEFAULT_TOL:g} or ${ENV_TOL})")
    p.add_argument("--format", choices=("text", "json", "csv"), default="text")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trials", type=int, default=100)
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    root = _Parser(prog="convex-bounds", description="Certified bounds for convex functions.")
    top = root.add_subparsers(dest="command", required=True)

    bound = top.add_parser("bound", help="evaluate one bound").add_subparsers(dest="kind", required=True)
    integral = bound.add_parser("integral", parents=[common], help="Hermite-Hadamard and its refinements")
    integral.add_argument("--n", type=int, help="also the Riemann-sum sandwich of order n")
    integral.add_argument("--refined", action="store_true", help="also the log-weighted refinement")
    integral.add_argument("--weight", metavar="EXPR", help="Fejer upper bound with this symmetric weight")
    integral.add_argument("--target-gap", type=float, help="composite bisection down to this gap")
    series = bound.add_parser("series", parents=[common], help="series-integral sandwich on [0, inf)")
    series.add_argument("--variant", choices=("eq29", "eq210"), default="eq29")
    bound.add_parser("moment", parents=[common], help="first moment about the midpoint")
    bound.add_parser("trapezoid-gap", parents=[common], help="trapezoid gap for convex f''")
    mean = bound.add_parser("mean", parents=[common], help="mean-value enclosure for convex f'")
    mean.add_argument("--variant", choices=("endpoint", "midpoint"), default="endpoint")
    infl = bound.add_parser("inflection", parents=[common], help="Hadamard bound around the split point c")
    which = infl.add_mutually_exclusive_group()
    which.add_argument("--c", type=float)
    which.add_argument("--auto", action="store_true", help="locate c (default)")
    bound.add_parser("half-gap", parents=[common], help="right-half minus left-half integral")
    bound.add_parser("logmean", parents=[common], help="weighted geometric mean against AM")

    hardy = top.add_parser("hardy", help="Hardy ratio").add_subparsers(dest="kind", required=True)
    ratio = hardy.add_parser("ratio", parents=[common])
    ratio.add_argument("--alpha", type=float, required=True)
    ratio.add_argument("--p", type=float, required=True)

    product = top.add_parser("product", parents=[common], help="product bound for convex factors")
    product.add_argument("--ion", nargs=2, type=float, metavar=("P", "Q"), help="conjugate-exponent product bound with exponents p, q")

    check = top.add_parser("check", help="certificates").add_subparsers(dest="kind", required=True)
    conv = check.add_parser("convexity", parents=[common])
    conv.add_argument("--level", type=int, choices=(0, 1, 2), default=0)
    conv.add_argument("--grid", type=int, default=257)

    verify = top.add_parser("verify", help="randomised verification").add_subparsers(dest="kind", required=True)
    va = verify.add_parser("all", parents=[common])
    va.add_argument("--jobs", type=int, default=1)
    return root


def _one_function(args) -> FunctionSpec:
    if not args.functions:
        raise UsageError("missing -f EXPR")
    if len(args.functions) > 1:
        raise UsageError("this command takes a single -f")
    return FunctionSpec(parse(args.functions[0]))


def _functions(args) -> list[FunctionSpec]:
    if not args.functions:
        raise UsageError("missing -f EXPR")
    return [FunctionSpec(parse(s)) for s in args.functions]


def _interval(args) -> Interval:
    if args.a is None or args.b is None:
        raise UsageError("missing -a and/or -b")
    return Interval(args.a, args.b)


def _row(id_, f, iv, triple, tol) -> ReportRow:
    a, b = iv
    return ReportRow.judged(id_, f if isinstance(f, str) else f.text, a, b, *triple, tol)


def _bound_rows(args, tol) -> list[ReportRow]:
    kind = args.kind
    if kind == "logmean":
        if args.a is None or args.b is None:
            raise UsageError("missing --a and/or --b")
        return [_row("5.14", "log-mean", (args.a, args.b), tuple(db.log_mean_bound(args.a, args.b)), tol)]
    f = _one_function(args)
    if kind == "series":
        return [_row(_inequality_id(args), f, (0.0, INF), tuple(hc.series_sandwich(f, args.variant)), tol)]
    iv = _interval(args)
    if kind == "integral":
        rows = [_row("HH", f, iv, tuple(hc.hh(f, iv)), tol)]
        if args.n is not None:
            rows.append(_row("2.2", f, iv, tuple(hc.riemann_sandwich(f, iv, args.n)), tol))
        if args.refined:
            rows.append(_row("2.5", f, iv, tuple(hc.refined_rhh(f, iv)), tol))
        if args.weight:
            lhs, rhs = hc.fejer_upper(f, FunctionSpec(parse(args.weight)), iv, tol)
            rows.append(_row("fejer", f, iv, (-INF, lhs, rhs), tol))
        if args.target_gap is not None:
            rows.append(_row("HHc", f, iv, tuple(hc.composite_hh(f, iv, args.target_gap)), tol))
        return rows
    if kind == "inflection":
        rep, c = db.inflection_hadamard(f, iv, args.c)
        return [_row("4.1", f"{f.text} (c={fmt(c)})", iv, tuple(rep.enclosure()), tol)]
    engines = {
        "5.1": db.moment_enclosure,
        "5.3": db.trapezoid_gap_enclosure,
        "5.5": db.mean_enclosure_endpoint,
        "5.6": db.mean_enclosure_midpoint,
        "5.7": db.half_interval_gap,
    }
    id_ = _inequality_id(args)
    return [_row(id_, f, iv, tuple(engines[id_](f, iv).enclosure()), tol)]


KIND_IDS = {
    "integral": "HH",
    "moment": "5.1",
    "trapezoid-gap": "5.3",
    "inflection": "4.1",
    "half-gap": "5.7",
    "logmean": "5.14",
}


def _inequality_id(args) -> str:
    if args.command == "hardy":
        return "3.1"
    if args.command == "product":
        return "ion" if args.ion else "3.7"
    kind = args.kind
    if kind == "series":
        return {"eq29": "2.9", "eq210": "2.10"}[args.variant]
    if kind == "mean":
        return "5.5" if args.variant == "endpoint" else "5.6"
    return KIND_IDS[kind]


def _precondition_row(args, exc) -> ReportRow:
    id_ = _inequality_id(args)
    text = " ; ".join(args.functions or []) or "-"
    a = args.a if args.a is not None else math.nan
    b = args.b if args.b is not None else math.nan
    return ReportRow.precondition(id_, text, a, b, str(exc))


def _check_convexity(args, out) -> int:
    f = _one_function(args)
    iv = _interval(args)
    cert = certify(f.expression, args.level, iv, grid=args.grid)
    doc = {
        "function": f.text,
        "level": cert.target,
        "a": fmt(iv.a),
        "b": fmt(iv.b),
        "verdict": cert.verdict.value,
        "grid_size": cert.grid_size,
        "max_violation": fmt(cert.max_violation),
        "concavity_defect": fmt(cert.concavity_defect),
        "tolerance": fmt(cert.tolerance),
        "derivative_sign": cert.derivative_sign,
        "witness": [fmt(w) for w in cert.witness] if cert.witness else None,
    }
    if args.format == "json":
        out.write(json.dumps(doc, indent=2) + "\n")
    elif args.format == "csv":
        keys = [k for k in doc if k != "witness"]
        out.write(",".join(keys) + "\n" + ",".join(str(doc[k]) for k in keys) + "\n")
    else:
        line = f"{cert.verdict.value}: level {cert.target} of {f.text} on [{iv.a:g}, {iv.b:g}], grid {cert.grid_size}, max violation {cert.max_violation:.3g}"
        if cert.witness:
            line += f", witness pair ({cert.witness[0]:.6g}, {cert.witness[1]:.6g})"
        out.write(line + "\n")
    return 0 if cert.convex else EXIT_CODES[PRECONDITION]


def _verify(args, tol, out, err) -> int:
    if args.trials < 1:
        raise UsageError("--trials must be at least 1")
    rows, summary = verify_suite(args.trials, args.seed, tol, jobs=max(1, args.jobs))
    if args.format == "text":
        out.write(summary_text(summary))
    else:
        out.write(render(rows, args.format, summary if args.format == "json" else None))
        if args.format == "csv":
            err.write(summary_text(summary))
    return worst_exit(rows)


def summary_text(summary: dict) -> str:
    lines = [f"{'id':<6} {'trials':>6} {'pass':>6} {'fail':>5} {'precond':>7}  max violation"]
    for id_, s in summary["inequalities"].items():
        lines.append(
            f"{id_:<6} {s['trials']:>6} {s['passed']:>6} {s['failed']:>5} {s['precondition_failed']:>7}  {s['max_violation']:.3g}"
        )
    ce = summary["counterexample"]
    lines.append(f"violations: {summary['violations']}  precondition failures: {summary['precondition_failures']}  (tol {summary['tolerance']:g})")
    lines.append(f"non-convex product {ce['function']} on [{ce['a']:g}, {ce['b']:g}]: {ce['verdict']}")
    return "\n".join(lines) + "\n"


def _glue(argv: list[str]) -> list[str]:
    """Attach expression values to their flag so a leading minus is not read as an option."""
    out = []
    it = iter(argv)
    for tok in it:
        if tok in ("-f", "--weight"):
            val = next(it, None)
            if val is None:
                out.append(tok)
            else:
                out.append(f"-f{val}" if tok == "-f" else f"--weight={val}")
        else:
            out.append(tok)
    return out


def run(argv=None, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    try:
        args = parser.parse_args(_glue(argv))
        tol = args.tol if args.tol is not None else default_tol()
        if not tol > 0:
            raise UsageError("--tol must be positive")
        if args.command == "check":
            return _check_convexity(args, out)
        if args.command == "verify":
            return _verify(args, tol, out, err)
        try:
            if args.command == "bound":
                rows = _bound_rows(args, tol)
            elif args.command == "hardy":
                f = _one_function(args)
                enc = lp.hardy_ratio(f, lp.HardyParams(args.alpha, args.p), tol)
                rows = [_row("3.1", f, (0.0, INF), tuple(enc), tol)]
            else:
                us = _functions(args)
                iv = _interval(args)
                if args.ion:
                    if len(us) != 2:
                        raise UsageError("--ion takes exactly two -f functions")
                    lhs, rhs = lp.ion_bound(us[0], us[1], args.ion[0], args.ion[1], iv)
                    rows = [_row("ion", " ; ".join(u.text for u in us), iv, (-INF, lhs, rhs), tol)]
                else:
                    lhs, rhs = lp.product_bound(us, iv)
                    rows = [_row("3.7", " ; ".join(u.text for u in us), iv, (-INF, lhs, rhs), tol)]
        except PreconditionError as exc:
            rows = [_precondition_row(args, exc)]
        out.write(render(rows, args.format))
        return worst_exit(rows)
    except (UsageError, ParseError, ParameterError, IntervalError) as exc:
        err.write(f"convex-bounds: error: {exc}\n")
        return USAGE_EXIT
    except ConvexBoundsError as exc:
        err.write(f"convex-bounds: {type(exc).__name__}: {exc}\n")
        return EXIT_CODES[PRECONDITION]


def main() -> None:
    sys.exit(run())


__all__ = ["run", "main", "build_parser", "summary_text"]
