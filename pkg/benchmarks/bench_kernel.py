"""Compiled kernel against the numpy fallback.

    python3 benchmarks/bench_kernel.py [--repeat 5] [--points 100000]

Times postfix evaluation on a small batch (the certificate grid size) and a
large one, and adaptive Simpson, on a few integrands; checks that both
backends return the same numbers. ``kernel.eval_points`` sends batches of
``BATCH_SWITCH`` points or more to numpy, where vectorised ops win.
"""

from __future__ import annotations

import argparse
import sys
import time

import numpy as np

from convex_bounds.expr import parse
from convex_bounds.kernel import backends

CASES = {
    "quadratic": ("x^2", 0.0, 1.0, 1e-10),
    "generated": ("0.867659 * (x + 1.286163)^2 + 0.359558 * exp(1.231791 * x) + 0.552623 * exp(-0.37392 * x) - 0.515005 * x", -1.0, 0.2, 1e-10),
    "oscillating": ("sin(12*x)^2 * exp(-x) + sqrt(1 + x^2)", 0.0, 4.0, 1e-10),
    "near-log": ("x^2 * (ln(1.000001 - x) + ln(x + 0.000001))", 0.0, 1.0, 1e-10),
}


def best_of(fn, repeat: int) -> float:
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--points", type=int, default=100_000)
    args = ap.parse_args(argv)

    found = backends()
    if "cython" not in found:
        print("compiled kernel not built; only the fallback is available", file=sys.stderr)
    names = [n for n in ("python", "cython") if n in found]
    grids = {"eval-257": np.linspace(-0.9, 0.9, 257), "eval-big": np.linspace(-0.9, 0.9, args.points)}

    print(f"{'case':<12} {'task':<8} " + " ".join(f"{n:>12}" for n in names) + "   speedup  agree")
    print(f"{'':<12} {'':<8} " + " ".join(f"{'':>12}" for _ in names) + "   (python / compiled)")
    for case, (src, a, b, tol) in CASES.items():
        prog = parse(src).program
        for task in (*grids, "simpson"):
            times, outs = [], []
            for n in names:
                k = found[n]
                if task in grids:
                    fn = lambda k=k, xs=grids[task]: k.eval_points(prog, xs)  # noqa: E731
                else:
                    fn = lambda k=k: k.simpson(prog, a, b, tol)  # noqa: E731
                times.append(best_of(fn, args.repeat))
                outs.append(fn())
            if task in grids:
                agree = all(np.allclose(o, outs[0], rtol=1e-14, atol=0, equal_nan=True) for o in outs)
            else:
                agree = all(abs(o[0] - outs[0][0]) <= 10 * tol and o[2] == outs[0][2] for o in outs)
            speed = times[0] / times[-1]
            cells = " ".join(f"{t * 1e3:10.3f}ms" for t in times)
            print(f"{case:<12} {task:<8} {cells}   {speed:7.1f}x  {'yes' if agree else 'NO'}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
