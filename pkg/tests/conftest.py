import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from convex_bounds.expr import BinOp, Call, Const, Expression, Neg, Num, Var, X, call

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("ci", deadline=None, max_examples=300, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


# -- syntax trees -------------------------------------------------------------

numbers = st.floats(min_value=0.0, max_value=1e6, allow_nan=False, allow_infinity=False)
leaves = st.one_of(numbers.map(Num), st.just(Var()), st.sampled_from([Const("e"), Const("pi")]))


def _extend(children):
    return st.one_of(
        children.map(Neg),
        st.builds(BinOp, st.sampled_from("+-*/^"), children, children),
        st.builds(Call, st.sampled_from(["exp", "ln", "sqrt", "sin", "cos"]), children),
    )


trees = st.recursive(leaves, _extend, max_leaves=12)


# -- smooth random expressions for derivative checks ---------------------------


def smooth_expression(rng: np.random.Generator, depth: int = 3) -> Expression:
    """Random expression that is smooth on [-1, 1]: no poles, logs and roots of positive things."""
    if depth == 0 or rng.random() < 0.25:
        if rng.random() < 0.6:
            return X
        return Expression.of(round(float(rng.uniform(-2, 2)), 3))
    a = smooth_expression(rng, depth - 1)
    b = smooth_expression(rng, depth - 1)
    k = int(rng.integers(0, 9))
    if k == 0:
        return a + b
    if k == 1:
        return a - b
    if k == 2:
        return a * b
    if k == 3:
        return a / (2.5 + call("sin", b))
    if k == 4:
        return call("exp", 0.5 * call("sin", a))
    if k == 5:
        return call("ln", 1.5 + call("cos", a))
    if k == 6:
        return call("sqrt", 1.2 + call("sin", a))
    if k == 7:
        return (1.5 + call("cos", a)) ** int(rng.integers(-2, 4))
    return (2.0 + call("sin", a)) ** round(float(rng.uniform(-1.5, 2.5)), 2)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
