"""Sparse-feature removal, correlation pruning, and chained-equations imputation.

Pruning and imputation both operate on ordinal codes.  Pruning keeps the
feature set honest before modelling; imputation produces one completed
matrix (not m multiply-imputed copies) because downstream fits expect a
single design per split.
"""

import json
from dataclasses import dataclass

import numpy as np

from .cox import fit_univariate_coef
from .errors import SchemaError


@dataclass(frozen=True)
class PruneReport:
    dropped: tuple
    surviving: tuple
    correlations: np.ndarray
    feature_names: tuple
    threshold: float
    # name -> (partner kept at drop time, r with that partner)
    drop_reasons: dict

    def to_dict(self):
        return {
            "dropped": list(self.dropped),
            "surviving": list(self.surviving),
            "threshold": self.threshold,
            "feature_names": list(self.feature_names),
            "correlations": [[None if np.isnan(v) else round(float(v), 6)
                              for v in row] for row in self.correlations],
            "drop_reasons": {k: {"kept": p, "r": float(r)}
                             for k, (p, r) in self.drop_reasons.items()},
        }

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2)


def drop_sparse_features(cohort, max_missing_fraction=0.75):
    """Remove features whose observed missing rate reaches the cutoff."""
    if not 0 < max_missing_fraction <= 1:
        raise ValueError("max_missing_fraction must be in (0, 1]")
    rates = np.isnan(cohort.values).mean(axis=0)
    keep = [n for n, r in zip(cohort.feature_names, rates)
            if r < max_missing_fraction]
    dropped = [n for n, r in zip(cohort.feature_names, rates)
               if r >= max_missing_fraction]
    return cohort.select_features(keep), dropped


def pairwise_complete_correlations(values):
    """Pearson matrix over pairwise-complete rows; constant pairs give 0."""
    n, p = values.shape
    corr = np.eye(p)
    for i in range(p):
        for j in range(i + 1, p):
            both = ~np.isnan(values[:, i]) & ~np.isnan(values[:, j])
            r = 0.0
            if both.sum() >= 2:
                xi, xj = values[both, i], values[both, j]
                if np.ptp(xi) > 0 and np.ptp(xj) > 0:
                    r = float(np.corrcoef(xi, xj)[0, 1])
                    if not np.isfinite(r):
                        r = 0.0
            corr[i, j] = corr[j, i] = r
    return corr


def prune_correlated(cohort, threshold=0.7):
    """Greedy elimination of highly correlated feature pairs.

    Pairs at or above the threshold are visited in descending |r|; the
    loser of each live pair is the one with the higher missing rate,
    then the weaker univariate Cox association, then the later name.
    """
    if not 0 < threshold < 1:
        raise ValueError("threshold must be in (0, 1)")
    names = list(cohort.feature_names)
    values = cohort.values
    corr = pairwise_complete_correlations(values)
    miss = np.isnan(values).mean(axis=0)

    event = cohort.event.astype(bool)
    time = cohort.time_days.astype(float)

    univ = {}

    def univariate_strength(j):
        if j not in univ:
            obs = ~np.isnan(values[:, j])
            univ[j] = abs(fit_univariate_coef(values[obs, j], event[obs], time[obs]))
        return univ[j]

    pairs = []
    p = len(names)
    for i in range(p):
        for j in range(i + 1, p):
            if abs(corr[i, j]) >= threshold:
                pairs.append((i, j))
    pairs.sort(key=lambda ij: (-abs(corr[ij]), names[ij[0]], names[ij[1]]))

    alive = set(range(p))
    dropped = []
    reasons = {}
    for i, j in pairs:
        if i not in alive or j not in alive:
            continue
        if miss[i] != miss[j]:
            loser = i if miss[i] > miss[j] else j
        else:
            si, sj = univariate_strength(i), univariate_strength(j)
            if si != sj:
                loser = i if si < sj else j
            else:
                loser = max(i, j, key=lambda k: names[k])
        winner = j if loser == i else i
        alive.discard(loser)
        dropped.append(names[loser])
        reasons[names[loser]] = (names[winner], corr[i, j])
    surviving = [n for k, n in enumerate(names) if k in alive]
    report = PruneReport(
        dropped=tuple(dropped),
        surviving=tuple(surviving),
        correlations=corr,
        feature_names=tuple(names),
        threshold=threshold,
        drop_reasons=reasons,
    )
    return cohort.select_features(surviving), report


class MiceImputer:
    """Chained-equations imputation with predictive mean matching.

    fit learns per-feature linear conditionals over ``cycles`` sweeps on
    the training matrix and freezes the final-cycle models plus donor
    pools; transform replays those frozen models on new rows, so serving
    imputes deterministically without touching training data again.
    """

    def __init__(self, cycles=10, k_donors=5, random_state=None):
        if cycles < 1:
            raise ValueError("cycles must be >= 1")
        self.cycles = cycles
        self.k_donors = k_donors
        self.random_state = random_state

    def get_params(self, deep=True):
        return {"cycles": self.cycles, "k_donors": self.k_donors,
                "random_state": self.random_state}

    def set_params(self, **kv):
        for k, v in kv.items():
            if k not in self.get_params():
                raise ValueError(f"unknown parameter {k!r}")
            setattr(self, k, v)
        return self

    def _check_matrix(self, X):
        X = np.asarray(X, dtype=float)
        if X.ndim != 2:
            raise ValueError("X must be 2-d")
        return X

    def fit(self, X, ranges=None, feature_names=None):
        X = self._check_matrix(X)
        n, p = X.shape
        if n == 0:
            raise ValueError("empty matrix")
        mask = np.isnan(X)
        n_obs = (~mask).sum(axis=0)
        if np.any(n_obs == 0):
            j = int(np.flatnonzero(n_obs == 0)[0])
            name = feature_names[j] if feature_names else f"column {j}"
            raise SchemaError(
                f"{name} has no observed values; drop it before imputing"
            )
        if not np.any(n_obs == n):
            raise SchemaError("at least one fully observed feature is required")
        if ranges is None:
            ranges = [(float(np.nanmin(X[:, j])), float(np.nanmax(X[:, j])))
                      for j in range(p)]
        self.ranges_ = [(float(lo), float(hi)) for lo, hi in ranges]
        self.feature_names_ = (tuple(feature_names) if feature_names
                               else tuple(f"x{j}" for j in range(p)))
        self.n_features_in_ = p
        self.medians_ = np.nanmedian(X, axis=0)

        rates = mask.mean(axis=0)
        with_missing = np.flatnonzero(rates > 0)
        self.visit_order_ = tuple(
            int(j) for j in with_missing[np.argsort(rates[with_missing],
                                                    kind="stable")]
        )

        work = X.copy()
        for j in range(p):
            work[mask[:, j], j] = self.medians_[j]

        rng = np.random.default_rng(self.random_state)
        models = {}
        for cycle in range(self.cycles):
            last = cycle == self.cycles - 1
            for j in self.visit_order_:
                obs = ~mask[:, j]
                beta, yhat = self._fit_column(work, j, obs)
                mis_rows = np.flatnonzero(~obs)
                donors_y = X[obs, j]
                donors_pred = yhat[obs]
                picked = self._pmm(yhat[~obs], donors_pred, donors_y, rng)
                work[mis_rows, j] = self._snap(picked, j)
                if last:
                    models[j] = (beta, donors_pred.copy(), donors_y.copy())
        self.models_ = models
        self.training_result_ = work
        return self

    def fit_transform(self, X, ranges=None, feature_names=None):
        return self.fit(X, ranges=ranges, feature_names=feature_names).training_result_

    def transform(self, X):
        if not hasattr(self, "models_"):
            raise ValueError("imputer is not fitted")
        X = self._check_matrix(X)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(
                f"X has {X.shape[1]} features, imputer expects {self.n_features_in_}"
            )
        mask = np.isnan(X)
        if not mask.any():
            return X.copy()
        work = X.copy()
        for j in range(self.n_features_in_):
            work[mask[:, j], j] = self.medians_[j]
        # derived stream: same records in, same completions out
        rng = np.random.default_rng(
            np.random.SeedSequence([0 if self.random_state is None
                                    else int(self.random_state), 1])
        )
        for _ in range(self.cycles):
            for j in self.visit_order_:
                rows = np.flatnonzero(mask[:, j])
                if rows.size == 0:
                    continue
                beta, donors_pred, donors_y = self.models_[j]
                design = np.column_stack(
                    [np.ones(rows.size), np.delete(work[rows], j, axis=1)]
                )
                pred = design @ beta
                picked = self._pmm(pred, donors_pred, donors_y, rng)
                work[rows, j] = self._snap(picked, j)
        return work

    def _fit_column(self, work, j, obs):
        others = np.delete(work, j, axis=1)
        design = np.column_stack([np.ones(work.shape[0]), others])
        beta, *_ = np.linalg.lstsq(design[obs], work[obs, j], rcond=None)
        return beta, design @ beta

    def _pmm(self, pred_mis, donors_pred, donors_y, rng):
        k = min(self.k_donors, donors_y.size)
        n_obs = donors_y.size
        order = np.argsort(donors_pred, kind="stable")
        dp = donors_pred[order]
        dy = donors_y[order]
        width = min(2 * k, n_obs)
        # the k nearest donors lie inside a contiguous window of width 2k
        # around the insertion point of each target into the sorted pool
        start = np.clip(np.searchsorted(dp, pred_mis) - k, 0, n_obs - width)
        window = start[:, None] + np.arange(width)[None, :]
        dist = np.abs(dp[window] - pred_mis[:, None])
        near = np.argsort(dist, axis=1, kind="stable")[:, :k]
        chosen = near[np.arange(pred_mis.size), rng.integers(0, k, pred_mis.size)]
        return dy[window[np.arange(pred_mis.size), chosen]]

    def _snap(self, vals, j):
        lo, hi = self.ranges_[j]
        return np.clip(np.rint(vals), lo, hi)

    def state_dict(self):
        return {
            "cycles": self.cycles,
            "k_donors": self.k_donors,
            "random_state": self.random_state,
            "ranges": self.ranges_,
            "feature_names": list(self.feature_names_),
            "medians": self.medians_,
            "visit_order": list(self.visit_order_),
            "models": {str(j): {"beta": b, "donors_pred": dp, "donors_y": dy}
                       for j, (b, dp, dy) in self.models_.items()},
        }

    @classmethod
    def from_state_dict(cls, state):
        imp = cls(cycles=state["cycles"], k_donors=state["k_donors"],
                  random_state=state["random_state"])
        imp.ranges_ = [tuple(r) for r in state["ranges"]]
        imp.feature_names_ = tuple(state["feature_names"])
        imp.n_features_in_ = len(imp.feature_names_)
        imp.medians_ = np.asarray(state["medians"], dtype=float)
        imp.visit_order_ = tuple(int(j) for j in state["visit_order"])
        imp.models_ = {
            int(j): (np.asarray(m["beta"], dtype=float),
                     np.asarray(m["donors_pred"], dtype=float),
                     np.asarray(m["donors_y"], dtype=float))
            for j, m in state["models"].items()
        }
        return imp


def mice_impute(cohort, cycles=10, seed=0):
    """Completed copy of a cohort via chained-equations imputation."""
    meta = cohort.feature_meta
    imputer = MiceImputer(cycles=cycles, random_state=seed)
    completed = imputer.fit_transform(
        cohort.values,
        ranges=[(m.lo, m.hi) for m in meta],
        feature_names=list(cohort.feature_names),
    )
    return cohort.with_values(completed, refresh_missing=True)
