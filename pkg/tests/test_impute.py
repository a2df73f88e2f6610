import numpy as np
import pytest

from acsurv.cohort.schema import Cohort, FeatureMeta
from acsurv.impute import (MiceImputer, drop_sparse_features,
                           pairwise_complete_correlations, prune_correlated)


def _cohort(values, names=None, lo=0.0, hi=10.0, time=None, event=None):
    values = np.asarray(values, dtype=float)
    n, p = values.shape
    names = names or [f"v{j}" for j in range(p)]
    meta = [FeatureMeta(nm, lo, hi, float(np.isnan(values[:, j]).mean()))
            for j, nm in enumerate(names)]
    rng = np.random.default_rng(0)
    time = np.arange(1, n + 1) if time is None else time
    event = (rng.uniform(size=n) < 0.6).astype(int) if event is None else event
    return Cohort(values, time, event, feature_meta=meta)


def test_drop_sparse_boundary_is_inclusive():
    n = 100
    vals = np.ones((n, 3))
    vals[:75, 0] = np.nan   # exactly at the 0.75 cutoff -> dropped
    vals[:74, 1] = np.nan   # just under -> kept
    cohort = _cohort(vals, names=["gone", "kept", "full"])
    out, dropped = drop_sparse_features(cohort, max_missing_fraction=0.75)
    assert dropped == ["gone"]
    assert list(out.feature_names) == ["kept", "full"]


def test_pairwise_complete_correlations_handles_nan_and_constants():
    x = np.array([1.0, 2.0, 3.0, 4.0, np.nan])
    y = np.array([2.0, 4.0, 6.0, np.nan, 10.0])
    const = np.full(5, 3.0)
    corr = pairwise_complete_correlations(np.column_stack([x, y, const]))
    assert corr[0, 1] == pytest.approx(1.0)  # on the 3 complete rows
    assert corr[0, 2] == 0.0
    assert np.array_equal(np.diag(corr), np.ones(3))


def test_prune_drops_higher_missing_partner():
    rng = np.random.default_rng(1)
    base = rng.normal(size=400)
    a = base + rng.normal(scale=0.1, size=400)
    b = base + rng.normal(scale=0.1, size=400)
    b[:80] = np.nan  # same info, worse coverage
    c = rng.normal(size=400)
    cohort = _cohort(np.column_stack([a, b, c]), names=["a", "b", "c"],
                     lo=-10, hi=10)
    out, report = prune_correlated(cohort, threshold=0.7)
    assert report.dropped == ("b",)
    assert report.drop_reasons["b"][0] == "a"
    assert abs(report.drop_reasons["b"][1]) >= 0.7
    assert list(out.feature_names) == ["a", "c"]


def test_prune_tie_breaks_by_univariate_strength_then_name():
    rng = np.random.default_rng(2)
    n = 600
    base = rng.normal(size=n)
    a = base + rng.normal(scale=0.05, size=n)
    b = base + rng.normal(scale=0.05, size=n)
    # outcomes driven by the *a* copy: a has the stronger univariate link
    risk = 1.2 * a
    t_event = rng.exponential(scale=np.exp(-risk))
    time = np.maximum(1, np.ceil(t_event * 20)).astype(int)
    event = np.ones(n, dtype=int)
    cohort = _cohort(np.column_stack([a, b]), names=["a", "b"],
                     lo=-10, hi=10, time=time, event=event)
    out, report = prune_correlated(cohort, threshold=0.7)
    assert report.dropped == ("b",)

    # exact mirror columns: equal missing and strength, later name loses
    c = base.copy()
    cohort2 = _cohort(np.column_stack([c, c.copy()]), names=["x", "y"],
                      lo=-10, hi=10, time=time, event=event)
    _, report2 = prune_correlated(cohort2, threshold=0.7)
    assert report2.dropped == ("y",)


def test_prune_report_serialises():
    rng = np.random.default_rng(3)
    base = rng.normal(size=200)
    vals = np.column_stack([base, base + rng.normal(scale=0.01, size=200)])
    cohort = _cohort(vals, names=["p", "q"], lo=-10, hi=10)
    _, report = prune_correlated(cohort, threshold=0.7)
    d = report.to_dict()
    assert len(d["dropped"]) == 1 and d["dropped"][0] in ("p", "q")
    loser = d["dropped"][0]
    assert d["drop_reasons"][loser]["kept"] == ("q" if loser == "p" else "p")
    assert abs(d["drop_reasons"][loser]["r"]) >= 0.7
    assert isinstance(d["correlations"], list)
    report.to_json()


def _mcar(rng, X, rate):
    out = X.copy()
    mask = rng.uniform(size=X.shape) < rate
    out[mask] = np.nan
    return out


def _correlated_integer_data(rng, n=900):
    z = rng.normal(size=n)
    x0 = np.clip(np.round(3 + 2 * z + rng.normal(scale=0.6, size=n)), 0, 8)
    x1 = np.clip(np.round(4 + 1.6 * z + rng.normal(scale=0.6, size=n)), 0, 8)
    x2 = np.clip(np.round(2 - 1.4 * z + rng.normal(scale=0.6, size=n)), 0, 8)
    return np.column_stack([x0, x1, x2])


def test_mice_beats_median_imputation():
    rng = np.random.default_rng(4)
    full = _correlated_integer_data(rng)
    holey = _mcar(rng, full, 0.25)
    # keep one column complete so the chain has an anchor
    holey[:, 0] = full[:, 0]
    imp = MiceImputer(cycles=8, random_state=0)
    completed = imp.fit_transform(holey, ranges=[(0, 8)] * 3)
    mask = np.isnan(holey)
    mice_rmse = np.sqrt(np.mean((completed[mask] - full[mask]) ** 2))
    med = np.where(mask, np.nanmedian(holey, axis=0), holey)
    median_rmse = np.sqrt(np.mean((med[mask] - full[mask]) ** 2))
    assert mice_rmse < median_rmse * 0.85


def test_imputed_cells_respect_declared_ranges_and_integrality():
    rng = np.random.default_rng(5)
    full = _correlated_integer_data(rng)
    holey = _mcar(rng, full, 0.3)
    holey[:, 0] = full[:, 0]
    completed = MiceImputer(cycles=5, random_state=1).fit_transform(
        holey, ranges=[(0, 8)] * 3)
    assert not np.isnan(completed).any()
    assert (completed >= 0).all() and (completed <= 8).all()
    assert np.array_equal(completed, np.round(completed))
    # observed cells pass through untouched
    obs = ~np.isnan(holey)
    assert np.array_equal(completed[obs], holey[obs])


def test_pmm_draws_only_observed_donor_values():
    rng = np.random.default_rng(6)
    full = _correlated_integer_data(rng)
    holey = _mcar(rng, full, 0.3)
    holey[:, 0] = full[:, 0]
    completed = MiceImputer(cycles=6, random_state=2).fit_transform(
        holey, ranges=[(0, 8)] * 3)
    for j in range(3):
        observed = set(holey[~np.isnan(holey[:, j]), j])
        imputed = set(completed[np.isnan(holey[:, j]), j])
        assert imputed <= observed


def test_deterministic_and_transform_reuses_frozen_models():
    rng = np.random.default_rng(7)
    holey = _mcar(rng, _correlated_integer_data(rng), 0.25)
    holey[:, 0] = np.nan_to_num(holey[:, 0], nan=4.0)
    a = MiceImputer(cycles=6, random_state=3)
    ca = a.fit_transform(holey, ranges=[(0, 8)] * 3)
    b = MiceImputer(cycles=6, random_state=3)
    cb = b.fit_transform(holey, ranges=[(0, 8)] * 3)
    assert np.array_equal(ca, cb)
    # transform on new rows is itself reproducible
    new = _mcar(np.random.default_rng(8), _correlated_integer_data(
        np.random.default_rng(9), n=200), 0.25)
    t1 = a.transform(new)
    t2 = a.transform(new)
    assert np.array_equal(t1, t2)
    assert not np.isnan(t1).any()


def test_state_roundtrip_preserves_transform():
    rng = np.random.default_rng(10)
    holey = _mcar(rng, _correlated_integer_data(rng), 0.25)
    holey[:, 0] = np.nan_to_num(holey[:, 0], nan=4.0)
    imp = MiceImputer(cycles=5, random_state=4)
    imp.fit(holey, ranges=[(0, 8)] * 3)
    clone = MiceImputer.from_state_dict(imp.state_dict())
    new = _mcar(np.random.default_rng(11), _correlated_integer_data(
        np.random.default_rng(12), n=150), 0.3)
    assert np.array_equal(imp.transform(new), clone.transform(new))


def test_fit_errors_name_unusable_columns():
    X = np.column_stack([np.full(50, np.nan), np.ones(50)])
    with pytest.raises(ValueError) as exc:
        MiceImputer(cycles=2).fit(X, feature_names=["empty", "ok"])
    assert "empty" in str(exc.value)
    all_holey = np.where(np.eye(4) > 0, np.nan, 1.0)
    with pytest.raises(ValueError):
        MiceImputer(cycles=2).fit(all_holey)


def test_sklearn_params_surface():
    imp = MiceImputer(cycles=3, k_donors=4, random_state=9)
    params = imp.get_params()
    assert params == {"cycles": 3, "k_donors": 4, "random_state": 9}
    imp.set_params(cycles=5)
    assert imp.cycles == 5
