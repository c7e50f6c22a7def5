import os
import subprocess
import sys

import numpy as np
import pytest
from conftest import smooth_expression

from convex_bounds import _pykernel, kernel
from convex_bounds.expr import parse

compiled = kernel.backends().get("cython")
needs_compiled = pytest.mark.skipif(compiled is None, reason="compiled kernel not built")


@needs_compiled
@pytest.mark.skipif(os.environ.get("CONVEX_BOUNDS_PURE", "") not in ("", "0"), reason="fallback forced")
def test_compiled_backend_is_default():
    assert kernel.BACKEND == "cython"


@needs_compiled
def test_point_evaluation_agrees(rng):
    for _ in range(200):
        prog = smooth_expression(rng).program
        xs = rng.uniform(-1, 1, 33)
        np.testing.assert_allclose(compiled.eval_points(prog, xs), _pykernel.eval_points(prog, xs), rtol=1e-13, atol=1e-15)
        x = float(xs[0])
        assert compiled.eval_point(prog, x) == pytest.approx(_pykernel.eval_point(prog, x), rel=1e-13, abs=1e-15)


@needs_compiled
def test_non_finite_values_agree():
    prog = parse("ln(x) + 1/(x-1)").program
    xs = np.array([-1.0, 0.0, 0.5, 1.0, 2.0])
    np.testing.assert_array_equal(compiled.eval_points(prog, xs), _pykernel.eval_points(prog, xs))


@needs_compiled
@pytest.mark.parametrize(
    "source, a, b",
    [("x^2", 0.0, 1.0), ("exp(x)*sin(3*x)", -1.0, 2.0), ("sqrt(1+x^2)", 0.0, 4.0), ("x^2*ln(1.0001-x)", 0.0, 1.0)],
)
def test_simpson_backends_make_the_same_leaves(source, a, b):
    prog = parse(source).program
    cv, ce, cl, cs = compiled.simpson(prog, a, b, 1e-10)
    pv, pe, pl, ps = _pykernel.simpson(prog, a, b, 1e-10)
    assert (cl, cs) == (pl, ps)
    assert cv == pytest.approx(pv, rel=1e-13, abs=1e-14)


def test_simpson_reports_non_finite():
    _, _, _, status = kernel.simpson(parse("1/(x-0.5)").program, 0.0, 1.0, 1e-8)
    assert status == 1


def test_large_batches_go_to_numpy():
    prog = parse("x^3").program
    xs = np.linspace(0, 1, kernel.BATCH_SWITCH + 1)
    np.testing.assert_array_equal(kernel.eval_points(prog, xs), _pykernel.eval_points(prog, xs))


def test_pure_fallback_selected_by_environment():
    env = dict(os.environ, CONVEX_BOUNDS_PURE="1")
    code = (
        "from convex_bounds import kernel, quadrature\n"
        "print(kernel.BACKEND, round(quadrature.integrate('x^2', (0, 1)).value, 12))"
    )
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.split() == ["python", "0.333333333333"]
