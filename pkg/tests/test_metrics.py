import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from acsurv.errors import UndefinedMetricError
from acsurv.metrics import (MetricValue, aggregate_ci, brier_score,
                            dynamic_auc, harrell_cindex, integrated_brier,
                            ipcw_cindex, roc_with_clinical_metrics)
from acsurv.nonparametric import censoring_km

from conftest import random_survival


# ---------------------------------------------------------------- oracles

def harrell_pairs_oracle(event, time, scores):
    """Literal definition: loop every ordered pair."""
    conc = 0.0
    comp = 0
    n = len(time)
    for i in range(n):
        if not event[i]:
            continue
        for j in range(n):
            if time[j] > time[i]:
                comp += 1
                if scores[i] > scores[j]:
                    conc += 1.0
                elif scores[i] == scores[j]:
                    conc += 0.5
    if comp == 0:
        raise ZeroDivisionError
    return conc / comp


def ipcw_oracle(train_outcomes, scores, test_outcomes, tau):
    event, time = test_outcomes
    g = censoring_km(*train_outcomes)
    num = 0.0
    den = 0.0
    n = len(time)
    for i in range(n):
        if not (event[i] and time[i] <= tau):
            continue
        gi = g.left_limit(time[i])
        if gi <= 0:
            continue
        w = 1.0 / gi**2
        for j in range(n):
            if time[j] > time[i]:
                den += w
                if scores[i] > scores[j]:
                    num += w
                elif scores[i] == scores[j]:
                    num += 0.5 * w
    if den == 0:
        raise ZeroDivisionError
    return num / den


def brier_oracle(t, s_hat, event, time, g):
    total = 0.0
    for i in range(len(time)):
        if time[i] <= t and event[i]:
            total += s_hat[i] ** 2 / g.left_limit(time[i])
        elif time[i] > t:
            total += (1 - s_hat[i]) ** 2 / g(t)
    return total / len(time)


# ------------------------------------------------------------ hand values

def test_harrell_hand_computed():
    # deaths at 2 and 5, censoring at 4 and 8; scores rank subject 1 highest
    event = np.array([True, False, True, False])
    time = np.array([2.0, 4.0, 5.0, 8.0])
    scores = np.array([3.0, 1.0, 2.0, 0.0])
    # comparable: (1,2),(1,3),(1,4),(3,4) and all are concordant
    assert harrell_cindex(event, time, scores) == 1.0
    assert harrell_cindex(event, time, -scores) == 0.0
    assert harrell_cindex(event, time, np.zeros(4)) == 0.5


def test_harrell_tie_gets_half_credit():
    event = np.array([True, False])
    time = np.array([1.0, 2.0])
    scores = np.array([1.0, 1.0])
    assert harrell_cindex(event, time, scores) == 0.5


def test_harrell_no_comparable_pairs_raises():
    event = np.array([False, False])
    time = np.array([1.0, 2.0])
    with pytest.raises(UndefinedMetricError):
        harrell_cindex(event, time, np.array([1.0, 0.0]))


def test_uno_equals_harrell_without_censoring():
    rng = np.random.default_rng(0)
    event = np.ones(80, dtype=bool)
    time = rng.uniform(1, 100, size=80)
    scores = rng.normal(size=80)
    outcomes = (event, time)
    h = harrell_cindex(event, time, scores)
    u = ipcw_cindex(outcomes, scores, outcomes)
    assert u == pytest.approx(h, abs=1e-12)


def test_ipcw_matches_double_loop():
    rng = np.random.default_rng(1)
    for trial in range(10):
        event, time = random_survival(rng, 60, censor_frac=0.4, ties=True)
        if event.sum() < 3 or event.all():
            continue
        scores = rng.normal(size=60)
        tau = np.quantile(time[event], 0.8)
        got = ipcw_cindex((event, time), scores, (event, time), tau=tau)
        want = ipcw_oracle((event, time), scores, (event, time), tau)
        assert got == pytest.approx(want, abs=1e-12)


def test_ipcw_rejects_tau_beyond_censor_support():
    # train follow-up ends with a censoring: G hits 0 there
    event = np.array([True, True, False])
    time = np.array([1.0, 2.0, 3.0])
    test = (np.array([True, True, True, False]),
            np.array([0.5, 1.5, 2.5, 4.0]))
    with pytest.raises(UndefinedMetricError):
        ipcw_cindex((event, time), np.array([3.0, 2.0, 1.0, 0.0]), test,
                    tau=3.5)


def test_dynamic_auc_equals_sklearn_without_censoring():
    from sklearn.metrics import roc_auc_score
    rng = np.random.default_rng(2)
    n = 150
    event = np.ones(n, dtype=bool)
    time = rng.uniform(1, 100, size=n)
    scores = rng.normal(size=n)
    g = censoring_km(event, time)
    t = 40.0
    labels = time <= t
    want = roc_auc_score(labels, scores)
    got = dynamic_auc(t, scores, (event, time), g)
    assert got == pytest.approx(want, abs=1e-12)


def test_dynamic_auc_perfect_and_reversed():
    event = np.ones(6, dtype=bool)
    time = np.array([1.0, 2.0, 3.0, 10.0, 11.0, 12.0])
    scores = np.array([6.0, 5.0, 4.0, 1.0, 2.0, 3.0])
    g = censoring_km(event, time)
    assert dynamic_auc(5.0, scores, (event, time), g) == 1.0
    assert dynamic_auc(5.0, -scores, (event, time), g) == 0.0


def test_brier_constant_half_is_quarter_without_censoring():
    rng = np.random.default_rng(3)
    n = 100
    event = np.ones(n, dtype=bool)
    time = rng.uniform(1, 50, size=n)
    g = censoring_km(event, time)
    s_hat = np.full(n, 0.5)
    assert brier_score(25.0, s_hat, (event, time), g) == pytest.approx(0.25)


def test_brier_matches_double_loop_oracle_under_censoring():
    rng = np.random.default_rng(4)
    event, time = random_survival(rng, 70, censor_frac=0.4, ties=True)
    g = censoring_km(event, time)
    s_hat = rng.uniform(size=70)
    for t in np.quantile(time, [0.25, 0.5, 0.75]):
        if g(t) <= 0:
            continue
        got = brier_score(t, s_hat, (event, time), g)
        want = brier_oracle(t, s_hat, event, time, g)
        assert got == pytest.approx(want, abs=1e-12)


def test_integrated_brier_of_constant_curve():
    rng = np.random.default_rng(5)
    n = 120
    event = np.ones(n, dtype=bool)
    time = rng.uniform(1, 50, size=n)
    g = censoring_km(event, time)
    grid = np.linspace(5, 30, 12)
    curves = np.full((n, grid.size), 0.5)
    # Brier(t) is not constant here, but with all-events data and the
    # constant-half predictor each time's Brier is 0.25 exactly
    assert integrated_brier(grid, curves, (event, time), g) == pytest.approx(0.25)


def test_integrated_brier_is_trapezoid_average():
    rng = np.random.default_rng(6)
    event, time = random_survival(rng, 90, censor_frac=0.3)
    g = censoring_km(event, time)
    grid = np.linspace(0.1, 2.0, 8)
    curves = rng.uniform(size=(90, 8))
    per_t = [brier_score(t, curves[:, k], (event, time), g)
             for k, t in enumerate(grid)]
    want = np.trapezoid(per_t, grid) / (grid[-1] - grid[0])
    got = integrated_brier(grid, curves, (event, time), g)
    assert got == pytest.approx(want, abs=1e-12)


def test_roc_confusion_hand_case():
    probs = np.array([0.9, 0.8, 0.3, 0.4, 0.25, 0.6])
    labels = np.array([1, 1, 0, 1, 0, 1])
    points = roc_with_clinical_metrics(probs, labels)
    at = {round(p.threshold, 4): p for p in points}
    pt = at[0.25]
    # threshold 0.25: predicted positive iff p >= 0.25 -> only 0.25 and up
    # TP=4, FN=0, FP=2, TN=0 ... wait 0.25 is positive; TN counts p<0.25
    assert pt.tpr == 1.0
    assert pt.fpr == 1.0
    pt4 = at[0.4]
    # positives at >= 0.4: labels 1,1,1,1 predicted; negatives 0.3, 0.25
    assert pt4.tpr == 1.0
    assert pt4.fpr == 0.0
    assert pt4.npv == 1.0
    assert pt4.ppv == 1.0


def test_roc_thresholds_cover_unit_interval_and_endpoints():
    rng = np.random.default_rng(7)
    probs = rng.uniform(size=40)
    labels = rng.integers(0, 2, size=40)
    points = roc_with_clinical_metrics(probs, labels)
    ths = [p.threshold for p in points]
    assert ths[0] == 1.0 and ths[-1] == 0.0
    assert all(a >= b for a, b in zip(ths, ths[1:]))


def test_roc_npv_none_when_no_predicted_negatives():
    probs = np.array([0.7, 0.8])
    labels = np.array([1, 0])
    points = roc_with_clinical_metrics(probs, labels)
    zero = [p for p in points if p.threshold == 0.0][0]
    assert zero.npv is None  # everything predicted positive


def test_metric_value_format_and_json():
    mv = MetricValue("cindex", 0.714, 0.711, 0.717, 20)
    assert mv.format() == "0.714 (0.711-0.717)"
    assert MetricValue("x", float("nan"), float("nan"), float("nan"), 0
                       ).format() == "-"
    d = mv.to_dict()
    back = MetricValue.from_dict(d)
    assert back == mv
    empty = MetricValue("x", float("nan"), float("nan"), float("nan"), 0)
    assert empty.to_dict()["point"] is None
    assert np.isnan(MetricValue.from_dict(empty.to_dict()).point)


def test_aggregate_ci_hand_computed():
    vals = [0.70, 0.71, 0.72]
    mv = aggregate_ci(vals, name="c")
    sd = np.std(vals, ddof=1)
    half = 1.96 * sd / np.sqrt(3)
    assert mv.point == pytest.approx(0.71)
    assert mv.ci_low == pytest.approx(0.71 - half)
    assert mv.ci_high == pytest.approx(0.71 + half)
    assert mv.n_repeats == 3


def test_aggregate_ci_skips_missing_and_degenerates():
    mv = aggregate_ci([0.7, None, float("nan")], name="c")
    assert mv.n_repeats == 1
    assert mv.point == 0.7
    assert mv.ci_low == 0.7 and mv.ci_high == 0.7
    gone = aggregate_ci([None, None], name="c")
    assert np.isnan(gone.point)


# ------------------------------------------------------------- properties

@settings(max_examples=40, deadline=None)
@given(st.integers(min_value=4, max_value=50), st.integers(min_value=0, max_value=2**31))
def test_harrell_reversal_antisymmetry(n, seed):
    rng = np.random.default_rng(seed)
    event, time = random_survival(rng, n, censor_frac=0.3, ties=True)
    if not event.any():
        event[0] = True
    scores = rng.normal(size=n)
    try:
        c = harrell_cindex(event, time, scores)
    except UndefinedMetricError:
        return
    c_rev = harrell_cindex(event, time, -scores)
    assert c + c_rev == pytest.approx(1.0, abs=1e-12)
    assert 0.0 <= c <= 1.0


@settings(max_examples=30, deadline=None)
@given(st.integers(min_value=5, max_value=60), st.integers(min_value=0, max_value=2**31))
def test_harrell_matches_double_loop(n, seed):
    rng = np.random.default_rng(seed)
    event, time = random_survival(rng, n, censor_frac=0.4, ties=True)
    scores = np.round(rng.normal(size=n), 1)  # induce score ties too
    try:
        got = harrell_cindex(event, time, scores)
    except UndefinedMetricError:
        with pytest.raises(ZeroDivisionError):
            harrell_pairs_oracle(event, time, scores)
        return
    assert got == pytest.approx(harrell_pairs_oracle(event, time, scores),
                                abs=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.integers(min_value=10, max_value=60), st.integers(min_value=0, max_value=2**31))
def test_brier_zero_for_oracle_predictor(n, seed):
    # predictor that knows the outcome scores 0 at any horizon between times
    rng = np.random.default_rng(seed)
    event = np.ones(n, dtype=bool)
    time = np.asarray(rng.uniform(1, 100, size=n))
    t = float(np.median(time)) + 1e-9
    s_hat = (time > t).astype(float)
    g = censoring_km(event, time)
    assert brier_score(t, s_hat, (event, time), g) == pytest.approx(0.0)
