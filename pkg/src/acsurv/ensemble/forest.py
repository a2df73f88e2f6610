"""Random survival forest with log-rank split selection.

Each tree grows on a bootstrap resample; at every node a random subset of
sqrt(p) features is scanned and the split maximising the two-sample
log-rank statistic is taken.  Leaves store the Nelson-Aalen cumulative
hazard of their training members; the forest prediction is the average
leaf hazard across trees, and the scalar risk score is that average
hazard summed over a fixed quantile grid of training event times.
"""

import numpy as np
from joblib import Parallel, delayed
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from ..nonparametric import check_survival_target, nelson_aalen
from .tree import TreeArrays, encode_columns


def logrank_statistic(time, event, group):
    """Two-sample log-rank chi-square statistic.

    ``group`` is boolean membership of the first group.  Returns 0.0 when
    the variance vanishes (e.g. all subjects share one time).
    """
    time = np.asarray(time, dtype=float)
    event = np.asarray(event, dtype=bool)
    group = np.asarray(group, dtype=bool)
    order = np.argsort(time, kind="mergesort")
    t, e, gr = time[order], event[order].astype(float), group[order].astype(float)
    times, first = np.unique(t, return_index=True)
    d = np.add.reduceat(e, first)
    d1 = np.add.reduceat(e * gr, first)
    counts = np.add.reduceat(np.ones_like(t), first)
    counts1 = np.add.reduceat(gr, first)
    n_at = np.cumsum(counts[::-1])[::-1]
    n1_at = np.cumsum(counts1[::-1])[::-1]
    frac = n1_at / n_at
    observed_minus_expected = float(np.sum(d1 - d * frac))
    with np.errstate(divide="ignore", invalid="ignore"):
        var_terms = d * frac * (1.0 - frac) * (n_at - d) / (n_at - 1.0)
    var = float(np.nansum(np.where(n_at > 1, var_terms, 0.0)))
    if var <= 0.0:
        return 0.0
    return observed_minus_expected**2 / var


def _node_best_split(codes_node, n_bins_list, time_node, event_node, candidates,
                     min_samples_leaf):
    """Best (feature, bin, statistic) over candidate features, or None."""
    order = np.argsort(time_node, kind="mergesort")
    t = time_node[order]
    e = event_node[order].astype(float)
    times, first = np.unique(t, return_index=True)
    m = times.size
    group_sizes = np.diff(np.append(first, t.size))
    tidx = np.repeat(np.arange(m), group_sizes)
    d_j = np.add.reduceat(e, first)
    n_j = np.cumsum(np.add.reduceat(np.ones_like(t), first)[::-1])[::-1]
    n_total = t.size

    best = None
    for j in candidates:
        nb = n_bins_list[j]
        col = codes_node[order, j]
        flat = tidx * nb + col
        deaths = np.bincount(flat, weights=e, minlength=m * nb).reshape(m, nb)
        counts = np.bincount(flat, minlength=m * nb).reshape(m, nb)
        left_counts = counts.cumsum(axis=1)
        left_deaths = deaths.cumsum(axis=1)
        left_at_risk = left_counts[::-1].cumsum(axis=0)[::-1]

        bin_counts = counts.sum(axis=0)
        totals = bin_counts.cumsum()
        present = bin_counts > 0
        valid = (
            present
            & (totals >= min_samples_leaf)
            & (n_total - totals >= min_samples_leaf)
            & (totals < n_total)
        )
        if not valid.any():
            continue
        frac = left_at_risk / n_j[:, None]
        ome = (left_deaths - d_j[:, None] * frac).sum(axis=0)
        with np.errstate(divide="ignore", invalid="ignore"):
            var_rows = (
                d_j[:, None] * frac * (1.0 - frac)
                * ((n_j - d_j) / np.maximum(n_j - 1.0, 1.0))[:, None]
            )
        var_rows[n_j <= 1] = 0.0
        var = var_rows.sum(axis=0)
        with np.errstate(divide="ignore", invalid="ignore"):
            stat = np.where((var > 0) & valid, ome**2 / var, -np.inf)
        b = int(np.argmax(stat))
        if np.isfinite(stat[b]) and stat[b] > 0 and (best is None or stat[b] > best[2]):
            best = (int(j), b, float(stat[b]))
    return best


def _grow_survival_tree(codes, values, time, event, params, rng):
    n, p = codes.shape
    k_features = params["max_features_resolved"]
    children_left, children_right = [], []
    feature, threshold, cover = [], [], []
    leaf_curves = []

    def add_node():
        for lst, default in (
            (children_left, -1), (children_right, -1), (feature, -1),
            (threshold, np.nan), (cover, 0.0), (leaf_curves, None),
        ):
            lst.append(default)
        return len(feature) - 1

    root = add_node()
    stack = [(root, np.arange(n), 0)]
    while stack:
        node, rows, depth = stack.pop()
        cover[node] = float(rows.size)
        split = None
        if depth < params["max_depth"] and rows.size >= params["min_samples_split"]:
            candidates = rng.choice(p, size=k_features, replace=False)
            split = _node_best_split(
                codes[rows], params["n_bins"], time[rows], event[rows],
                candidates, params["min_samples_leaf"],
            )
        if split is None:
            fn = nelson_aalen(event[rows], time[rows])
            leaf_curves[node] = (fn.x, fn.y)
            continue
        j, b, _ = split
        col = codes[rows, j]
        vals_j = values[j]
        right_bins = np.unique(col[col > b])
        left_node = add_node()
        right_node = add_node()
        feature[node] = j
        threshold[node] = 0.5 * (vals_j[b] + vals_j[right_bins[0]])
        children_left[node] = left_node
        children_right[node] = right_node
        mask = col <= b
        stack.append((right_node, rows[~mask], depth + 1))
        stack.append((left_node, rows[mask], depth + 1))

    tree = TreeArrays(
        np.asarray(children_left, dtype=np.int32),
        np.asarray(children_right, dtype=np.int32),
        np.asarray(feature, dtype=np.int32),
        np.asarray(threshold, dtype=float),
        np.zeros(len(feature)),
        np.asarray(cover, dtype=float),
        p,
    )
    return tree, leaf_curves


def _fit_one_tree(X, codes, values, time, event, params, seed, bootstrap):
    rng = np.random.default_rng(seed)
    n = X.shape[0]
    rows = rng.integers(0, n, size=n) if bootstrap else np.arange(n)
    tree, curves = _grow_survival_tree(
        codes[rows], values, time[rows], event[rows], params, rng
    )
    return tree, curves


class RandomSurvivalForest(BaseEstimator):
    """Bootstrap ensemble of log-rank survival trees."""

    def __init__(
        self,
        n_estimators=592,
        max_depth=7,
        min_samples_split=2,
        min_samples_leaf=20,
        max_features="sqrt",
        bootstrap=True,
        n_jobs=1,
        random_state=None,
    ):
        self.n_estimators = n_estimators
        self.max_depth = max_depth
        self.min_samples_split = min_samples_split
        self.min_samples_leaf = min_samples_leaf
        self.max_features = max_features
        self.bootstrap = bootstrap
        self.n_jobs = n_jobs
        self.random_state = random_state

    def fit(self, X, y, feature_names=None):
        X = check_array(X, dtype=float)
        event, time = check_survival_target(y)
        if X.shape[0] != time.shape[0]:
            raise ValueError("X and y have different numbers of rows")
        if int(self.n_estimators) < 1:
            raise ValueError("n_estimators must be >= 1")
        n, p = X.shape
        self.n_features_in_ = p
        self.feature_names_ = (
            [str(nm) for nm in feature_names]
            if feature_names is not None
            else [f"x{j}" for j in range(p)]
        )
        codes, values = encode_columns(X)
        if self.max_features == "sqrt" or self.max_features is None:
            k = max(1, int(round(np.sqrt(p))))
        else:
            k = min(p, int(self.max_features))
        params = {
            "max_depth": int(self.max_depth),
            "min_samples_split": int(self.min_samples_split),
            "min_samples_leaf": int(self.min_samples_leaf),
            "max_features_resolved": k,
            "n_bins": [len(v) for v in values],
        }
        # one child seed per tree, so n_jobs never changes the fit
        seeds = np.random.SeedSequence(self.random_state).spawn(int(self.n_estimators))
        results = Parallel(n_jobs=self.n_jobs)(
            delayed(_fit_one_tree)(X, codes, values, time, event, params, s, self.bootstrap)
            for s in seeds
        )
        self.trees_ = [r[0] for r in results]
        self.leaf_curves_ = [r[1] for r in results]
        event_times = np.unique(time[event])
        if event_times.size > 64:
            qs = np.linspace(0, 1, 64)
            grid = np.unique(np.quantile(event_times, qs, method="nearest"))
        else:
            grid = event_times
        self.risk_grid_ = grid
        self.event_times_ = event_times
        return self

    def predict_cumhaz(self, X, times):
        """Average cumulative hazard across trees, sampled at ``times``."""
        check_is_fitted(self, "trees_")
        X = check_array(X, dtype=float)
        times = np.asarray(times, dtype=float)
        out = np.zeros((X.shape[0], times.size))
        for tree, curves in zip(self.trees_, self.leaf_curves_):
            leaves = tree.apply(X)
            for leaf in np.unique(leaves):
                knots, vals = curves[leaf]
                idx = np.searchsorted(knots, times, side="right")
                haz = np.concatenate(([0.0], vals))[idx]
                out[leaves == leaf] += haz
        return out / len(self.trees_)

    def predict_survival(self, X, times):
        return np.exp(-self.predict_cumhaz(X, times))

    def predict(self, X):
        """Risk score: averaged cumulative hazard mass over the fit-time grid."""
        check_is_fitted(self, "trees_")
        return self.predict_cumhaz(X, self.risk_grid_).sum(axis=1)
