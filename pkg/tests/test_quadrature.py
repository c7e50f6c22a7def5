import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate as sci

from convex_bounds.convexity import Interval, certify, find_split
from convex_bounds.errors import DivergenceError, QuadratureError
from convex_bounds.expr import parse
from convex_bounds.quadrature import (
    FAMILIES,
    FunctionSpec,
    Generated,
    HalfLine,
    integrate,
    integrate_half_line,
    random_convex,
    sum_series,
    trial_rng,
)

E = math.e


def scipy_quad(f, a, b):
    value, _ = sci.quad(lambda x: float(f.value(x)), a, b, epsabs=1e-13, epsrel=1e-13, limit=500)
    return value


class TestIntegrate:
    def test_polynomial(self):
        r = integrate("x^2", (0, 1))
        assert r.value == pytest.approx(1 / 3, abs=1e-10)
        assert 0 <= r.error_estimate <= 1e-10
        assert r.subdivisions >= 1

    def test_log_weighted_square(self):
        r = integrate("x^2*(ln(1/((1-x)*x)) - 1)", (0, 1))
        assert r.value == pytest.approx(7 / 18, abs=1e-10)

    def test_log_singularity(self):
        assert integrate("ln(x)", (0, 1)).value == pytest.approx(-1.0, abs=1e-10)

    def test_inverse_sqrt_singularity(self):
        assert integrate("1/sqrt(x)", (0, 1), 1e-8).value == pytest.approx(2.0, abs=1e-7)

    @pytest.mark.parametrize(
        "source, a, b",
        [("exp(x)*cos(3*x)", -1.0, 2.0), ("sqrt(1+x^4)", 0.0, 3.0), ("1/(1+x^2)", -5.0, 5.0), ("x^x", 0.5, 2.0)],
    )
    def test_against_scipy(self, source, a, b):
        f = parse(source)
        assert integrate(f, (a, b)).value == pytest.approx(scipy_quad(f, a, b), abs=1e-10)

    def test_random_convex_against_scipy(self):
        for i in range(50):
            f = random_convex(5, "convex_f", i)
            a, b = f.domain
            assert integrate(f, f.domain).value == pytest.approx(scipy_quad(f, a, b), abs=1e-9)

    def test_non_finite_interior_sample(self):
        with pytest.raises(QuadratureError):
            integrate("1/(x-0.5)", (0, 1))

    @given(st.floats(0.05, 0.95))
    def test_additive(self, t):
        f = parse("exp(x)*sin(2*x) + x^4")
        a, b = -0.7, 1.9
        m = a + t * (b - a)
        tol = 1e-10
        whole = integrate(f, (a, b), tol).value
        parts = integrate(f, (a, m), tol).value + integrate(f, (m, b), tol).value
        assert abs(whole - parts) <= 2 * tol

    def test_function_spec_accepted(self):
        spec = FunctionSpec.parse("x^2", (0, 1))
        assert integrate(spec, spec.domain).value == pytest.approx(1 / 3, abs=1e-10)


class TestHalfLine:
    def test_exponential(self):
        assert integrate_half_line("exp(-x)").value == pytest.approx(1.0, abs=1e-8)

    def test_frullani(self):
        r = integrate_half_line("((1-exp(-x))/x)^2")
        assert r.value == pytest.approx(2 * math.log(2), abs=1e-8)

    def test_harmonic_tail_diverges(self):
        with pytest.raises(DivergenceError):
            integrate_half_line("1/(1+x)")

    @pytest.mark.parametrize("k", [0.5, 1.0, 2.0])
    def test_exponential_rates(self, k):
        tol = 1e-8
        r = integrate_half_line(f"exp(-{k}*x)", tol)
        assert abs(r.value - 1 / k) <= tol

    def test_shifted_start(self):
        r = integrate_half_line("1/(1+x)^2", 1e-9, start=100.0)
        assert r.value == pytest.approx(1 / 101, abs=1e-9)

    def test_algebraic_decay_against_scipy(self):
        f = parse("x/(1+x)^4 + exp(-x)*cos(x)^2")
        expected, _ = sci.quad(lambda x: float(f.value(x)), 0, np.inf, epsabs=1e-12, epsrel=1e-12)
        assert integrate_half_line(f, 1e-9).value == pytest.approx(expected, abs=1e-9)


class TestSeries:
    def test_geometric(self):
        assert sum_series("exp(-x)") == pytest.approx(1 / (E - 1), abs=1e-12)

    def test_half_offset(self):
        assert sum_series("exp(-x)", 0.5) == pytest.approx(math.sqrt(E) / (E - 1), abs=1e-12)

    def test_basel_tail(self):
        assert sum_series("1/(1+x)^2") == pytest.approx(math.pi**2 / 6 - 1, abs=1e-11)

    def test_trigamma_half(self):
        assert sum_series("1/(1+x)^2", 0.5) == pytest.approx(math.pi**2 / 2 - 4, abs=1e-11)

    def test_returns_builtin_float(self):
        assert type(sum_series("exp(-x)")) is float

    def test_offset_restricted(self):
        with pytest.raises(ValueError):
            sum_series("exp(-x)", 0.25)

    def test_increasing_terms_rejected(self):
        with pytest.raises(QuadratureError):
            sum_series("1 - exp(-x)")

    @given(st.floats(0.3, 3.0), st.floats(0.0, 2.0), st.sampled_from([0.0, 0.5]))
    def test_comparison(self, k, extra, offset):
        tol = 1e-12
        g = sum_series(f"exp(-{k}*x)", offset, tol)
        h = sum_series(f"exp(-{k}*x) + {extra}/(1+x)^3", offset, tol)
        assert g <= h + 2 * tol


class TestGenerators:
    def test_trial_rng_is_keyed(self):
        a = trial_rng(42, 1, 2).random(4)
        b = trial_rng(42, 1, 2).random(4)
        c = trial_rng(42, 2, 1).random(4)
        np.testing.assert_array_equal(a, b)
        assert not np.array_equal(a, c)

    def test_deterministic(self):
        assert random_convex(7, "convex_f", 3) == random_convex(7, "convex_f", 3)
        assert random_convex(7, "convex_f", 3) != random_convex(7, "convex_f", 4)

    def test_provenance(self):
        f = random_convex(1, "convex_fprime", 9)
        assert f.provenance == Generated(1, 9, "convex_fprime")
        assert isinstance(f.domain, Interval)

    def test_seed_one_convex(self):
        f = random_convex(1, "convex_f")
        assert certify(f.expression, 0, f.domain).convex

    def test_seed_two_convex_derivative(self):
        f = random_convex(2, "convex_fprime")
        assert certify(f.expression, 1, f.domain).convex

    def test_seed_three_split(self):
        f = random_convex(3, "concave_convex_split")
        c = find_split(f.expression, f.domain)
        assert f.domain.a < c < f.domain.b

    def test_decreasing_family(self):
        for i in range(30):
            f = random_convex(4, "convex_decreasing", i)
            assert f.domain == HalfLine()
            xs = np.linspace(0, 32, 257)
            v = f.expression.values(xs)
            assert (v > 0).all() and (np.diff(v) < 0).all()
            assert certify(f.expression, 0, (0, 32)).convex

    def test_unknown_family(self):
        with pytest.raises(ValueError):
            random_convex(0, "concave")

    def test_positive_option(self):
        for i in range(30):
            u = random_convex(9, "convex_f", i, positive=True)
            assert (u.expression.values(u.domain.grid(257)) > 0).all()

    def test_families_listed(self):
        assert FAMILIES[:4] == ("convex_f", "convex_fprime", "convex_fsecond", "concave_convex_split")
