import numpy as np
import pytest
from hypothesis import given, strategies as st

from acsurv.stepfun import (StepFunction, validate_cumulative_hazard,
                            validate_survival_curve)


def test_right_continuous_at_knots():
    f = StepFunction([1.0, 2.0, 3.0], [0.9, 0.5, 0.1], baseline=1.0)
    assert f(0.5) == 1.0
    assert f(1.0) == 0.9
    assert f(2.0) == 0.5
    assert f(2.999) == 0.5
    assert f(100.0) == 0.1


def test_left_limit():
    f = StepFunction([1.0, 2.0], [0.5, 0.2], baseline=1.0)
    assert f.left_limit(1.0) == 1.0
    assert f.left_limit(2.0) == 0.5
    assert f.left_limit(1.5) == 0.5


def test_vector_eval_matches_scalar():
    f = StepFunction([1.0, 4.0], [2.0, 7.0], baseline=0.0)
    ts = np.array([0.0, 1.0, 2.5, 4.0, 9.0])
    vec = f(ts)
    assert vec.shape == ts.shape
    assert [f(float(t)) for t in ts] == list(vec)


def test_knots_must_strictly_increase():
    with pytest.raises(ValueError):
        StepFunction([1.0, 1.0], [0.5, 0.4], baseline=1.0)
    with pytest.raises(ValueError):
        StepFunction([2.0, 1.0], [0.5, 0.4], baseline=1.0)


def test_monotone_checks_include_baseline():
    down = StepFunction([1.0, 2.0], [0.8, 0.3], baseline=1.0)
    assert down.is_monotone("decreasing")
    assert not down.is_monotone("increasing")
    # baseline above the first value breaks "increasing" even if y rises
    bumpy = StepFunction([1.0, 2.0], [0.5, 0.9], baseline=0.7)
    assert not bumpy.is_monotone("increasing")


def test_validators():
    surv = StepFunction([1.0, 2.0], [0.6, 0.2], baseline=1.0)
    validate_survival_curve(surv)
    haz = StepFunction([1.0, 2.0], [0.3, 1.1], baseline=0.0)
    validate_cumulative_hazard(haz)
    with pytest.raises(ValueError):
        validate_survival_curve(StepFunction([1.0], [1.4], baseline=1.0))
    with pytest.raises(ValueError):
        validate_cumulative_hazard(StepFunction([1.0], [-0.1], baseline=0.0))


def test_equality_is_exact():
    a = StepFunction([1.0, 2.0], [0.5, 0.2], baseline=1.0)
    b = StepFunction([1.0, 2.0], [0.5, 0.2], baseline=1.0)
    c = StepFunction([1.0, 2.0], [0.5, 0.2 + 1e-12], baseline=1.0)
    assert a == b
    assert a != c


@given(st.lists(st.floats(min_value=-50, max_value=50), min_size=1,
                max_size=20, unique=True),
       st.floats(min_value=-5, max_value=5))
def test_eval_between_knots_returns_left_knot_value(xs, t):
    xs = sorted(xs)
    ys = list(np.linspace(1, 0, len(xs)))
    f = StepFunction(xs, ys, baseline=1.0)
    idx = np.searchsorted(np.asarray(xs), t, side="right")
    expected = 1.0 if idx == 0 else ys[idx - 1]
    assert f(t) == expected
