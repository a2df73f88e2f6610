import json

import numpy as np
import pytest

from acsurv.calibration import (PlattScaler, binarize_at_horizon,
                                calibrated_predict, calibration_curve,
                                fit_platt)
from acsurv.errors import UndefinedMetricError


def _scores_labels(seed, n=2000, slope=1.4, intercept=-0.3):
    """Risk scores with survival labels: p(y=1|s) = sigmoid(-(A s + B))."""
    rng = np.random.default_rng(seed)
    s = rng.normal(size=n)
    p = 1.0 / (1.0 + np.exp(slope * s + intercept))
    return s, (rng.uniform(size=n) < p).astype(float)


def test_binarize_at_horizon():
    event = np.array([True, True, False, False, False])
    time = np.array([50.0, 200.0, 60.0, 200.0, 182.0])
    labels, included = binarize_at_horizon((event, time), 182.0)
    # died by 182 -> 0; survived past 182 -> 1; censored at/before -> excluded
    assert list(included) == [True, True, False, True, False]
    assert list(labels[included]) == [0.0, 1.0, 1.0]
    # subject 1 died at 200 > 182, so it counts as a survivor
    with pytest.raises(UndefinedMetricError):
        binarize_at_horizon((np.array([False]), np.array([10.0])), 182.0)


def test_fit_recovers_logistic_map():
    s, y = _scores_labels(0)
    scaler = fit_platt(s, y)
    assert scaler.converged
    assert scaler.slope == pytest.approx(1.4, abs=0.15)
    assert scaler.intercept == pytest.approx(-0.3, abs=0.1)
    assert scaler.n_fit == 2000


def test_predict_uses_minus_a_s_minus_b():
    s, y = _scores_labels(1)
    scaler = fit_platt(s, y)
    manual = 1.0 / (1.0 + np.exp(scaler.slope * s + scaler.intercept))
    assert np.allclose(scaler.predict(s), manual, atol=1e-12)
    assert ((scaler.predict(s) > 0) & (scaler.predict(s) < 1)).all()


def test_probabilities_invariant_to_score_rescaling():
    s, y = _scores_labels(2)
    a = fit_platt(s, y)
    b = fit_platt(s * 2.0, y)
    assert b.slope == pytest.approx(a.slope / 2.0, rel=1e-6)
    assert np.allclose(a.predict(s), b.predict(s * 2.0), atol=1e-6)


def test_survival_probability_decreasing_in_risk():
    s, y = _scores_labels(3)
    scaler = fit_platt(s, y)
    grid = np.linspace(-4, 4, 100)
    assert (np.diff(scaler.predict(grid)) < 0).all()


def test_permuted_labels_give_flat_slope():
    rng = np.random.default_rng(4)
    s, y = _scores_labels(4)
    scaler = fit_platt(s, rng.permutation(y))
    assert abs(scaler.slope) < 0.1


def test_perfect_separation_diagnosed_and_bounded():
    # low risk scores all survive, high risk scores all die
    s = np.concatenate([np.full(30, -2.0) + np.arange(30) * 0.01,
                        np.full(30, 2.0) + np.arange(30) * 0.01])
    y = np.concatenate([np.ones(30), np.zeros(30)])
    scaler = fit_platt(s, y)
    assert any("separation" in d for d in scaler.diagnostics)
    assert np.isfinite(scaler.slope)
    p = scaler.predict(s)
    assert ((p > 0) & (p < 1)).all()


def test_negative_association_diagnosed():
    # higher risk score paired with higher survival: slope comes out
    # negative and the fit says so
    s, y = _scores_labels(5)
    scaler = fit_platt(-s, y)
    assert scaler.slope < 0
    assert any("negative" in d for d in scaler.diagnostics)


def test_scaler_json_roundtrip():
    s, y = _scores_labels(6)
    scaler = fit_platt(s, y, horizon_days=182.0, n_excluded=7)
    d = scaler.to_dict()
    json.dumps(d)  # must be strict-JSON serialisable
    back = PlattScaler.from_dict(d)
    assert back.slope == scaler.slope
    assert back.horizon_days == 182.0
    assert back.n_excluded == 7
    assert np.allclose(back.predict(s), scaler.predict(s))


def test_calibration_curve_bins():
    probs = np.array([0.05, 0.15, 0.18, 0.95, 0.85])
    labels = np.array([0.0, 0.0, 1.0, 1.0, 1.0])
    curve = calibration_curve(probs, labels, n_bins=10)
    assert curve.counts[0] == 1 and curve.counts[1] == 2
    assert curve.mean_predicted[1] == pytest.approx((0.15 + 0.18) / 2)
    assert curve.observed_fraction[1] == pytest.approx(0.5)
    d = curve.to_dict()
    assert d["mean_predicted"][2] is None  # empty bin -> null, not NaN
    json.dumps(d)
    csv_text = curve.to_csv()
    assert csv_text.splitlines()[0] == (
        "bin_low,bin_high,mean_predicted,observed_fraction,count")


def test_well_calibrated_curve_near_diagonal():
    rng = np.random.default_rng(7)
    p = rng.uniform(0.05, 0.95, size=20000)
    y = (rng.uniform(size=p.size) < p).astype(float)
    curve = calibration_curve(p, y, n_bins=10)
    for mp, of, c in zip(curve.mean_predicted, curve.observed_fraction,
                         curve.counts):
        if c > 200:
            assert of == pytest.approx(mp, abs=0.05)


def test_calibrated_predict_checks_horizon(boosted_small):
    model, X, event, time = boosted_small
    labels, included = binarize_at_horizon((event, time), 1.0)
    scaler = fit_platt(model.predict(X)[included], labels[included],
                       horizon_days=1.0)
    cal, uncal = calibrated_predict(model, scaler, X[:5], horizon_days=1.0)
    assert cal.shape == (5,)
    assert ((cal > 0) & (cal < 1)).all()
    with pytest.raises(ValueError):
        calibrated_predict(model, scaler, X[:5], horizon_days=91.0)
