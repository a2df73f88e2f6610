"""Path-dependent SHAP attributions for boosted margins, plus plot data.

The tree algorithm exploits the leaf decomposition of a tree function.
Conditioned on a feature subset S, descending a tree with cover-weighted
averaging at splits on features outside S gives

    f(x | S) = sum over leaves of  v_leaf * prod(path factors)

where the factor at a split on feature j is the 0/1 indicator of x's
branch when j is in S and the child/parent cover ratio otherwise.  The
per-leaf game collapses to two numbers per distinct path feature: the
cover product z_j and the indicator o_j.  Shapley values of that game
have a closed form in the elementary symmetric polynomials of the z's
over the satisfied features, so each leaf costs O(d^2) with d bounded
by the tree depth.

Attributions target the margin (log-hazard), not survival probability;
additivity only holds on that scale.
"""

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .cox import CoxPH, PenalizedCox
from .ensemble.boosting import GradientBoostedCox


@dataclass(frozen=True)
class ShapExplanation:
    base_value: float
    contributions: np.ndarray
    feature_values: np.ndarray
    feature_names: tuple

    @property
    def margin(self):
        return float(self.base_value + self.contributions.sum())

    def to_dict(self):
        return {
            "base_value": self.base_value,
            "contributions": self.contributions.tolist(),
            "feature_values": [None if np.isnan(v) else v
                               for v in self.feature_values.tolist()],
            "feature_names": list(self.feature_names),
            "margin": self.margin,
        }


def _shapley_weights(d):
    fact = [math.factorial(k) for k in range(d + 1)]
    return np.array(
        [fact[k] * fact[d - k - 1] / fact[d] for k in range(d)], dtype=float
    )


class _LeafGame:
    """Static per-leaf data: distinct path features, cover products, conditions."""

    __slots__ = ("feats", "z", "conds", "z_all", "value")

    def __init__(self, feats, z, conds, value):
        self.feats = feats
        self.z = z
        self.conds = conds
        self.z_all = float(z.prod()) if z.size else 1.0
        self.value = value


def _extract_leaves(tree):
    leaves = []
    stack = [(0, [])]
    while stack:
        node, path = stack.pop()
        if tree.children_left[node] < 0:
            by_feat = {}
            for feat, thr, went_left, ratio in path:
                entry = by_feat.setdefault(feat, [1.0, []])
                entry[0] *= ratio
                entry[1].append((thr, went_left))
            feats = np.array(sorted(by_feat), dtype=np.intp)
            z = np.array([by_feat[f][0] for f in feats], dtype=float)
            conds = [by_feat[f][1] for f in feats]
            leaves.append(_LeafGame(feats, z, conds, float(tree.value[node])))
            continue
        left, right = tree.children_left[node], tree.children_right[node]
        feat = int(tree.feature[node])
        thr = float(tree.threshold[node])
        cov = tree.cover[node]
        stack.append((left, path + [(feat, thr, True, tree.cover[left] / cov)]))
        stack.append((right, path + [(feat, thr, False, tree.cover[right] / cov)]))
    return leaves


class TreeExplainer:
    """Reusable SHAP engine for a fitted GradientBoostedCox model."""

    def __init__(self, model):
        if not isinstance(model, GradientBoostedCox):
            raise TypeError(
                "tree SHAP needs a GradientBoostedCox model with node covers; "
                f"got {type(model).__name__}"
            )
        trees = getattr(model, "trees_", None)
        if trees is None:
            raise TypeError("model must be fitted before explaining")
        self.n_features = model.n_features_in_
        self.feature_names = tuple(model.feature_names_)
        self._lr = model.params_["learning_rate"]
        self._leaves = [_extract_leaves(t) for t in trees]
        self._weights = {}
        self.base_value = self._lr * sum(
            leaf.value * leaf.z_all for per_tree in self._leaves for leaf in per_tree
        )

    def _w(self, d):
        if d not in self._weights:
            self._weights[d] = _shapley_weights(d)
        return self._weights[d]

    def shap_values(self, X):
        """Per-row contribution matrix; rows satisfy local accuracy."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != self.n_features:
            raise ValueError(
                f"X has {X.shape[1]} features, model expects {self.n_features}"
            )
        n = X.shape[0]
        phi = np.zeros((n, self.n_features))
        powers = 1 << np.arange(16)
        for per_tree in self._leaves:
            for leaf in per_tree:
                d = leaf.feats.size
                if d == 0:
                    continue
                scale = self._lr * leaf.value
                o = np.empty((n, d), dtype=bool)
                for k in range(d):
                    col = X[:, leaf.feats[k]]
                    ok = np.ones(n, dtype=bool)
                    for thr, went_left in leaf.conds[k]:
                        ok &= (col < thr) == went_left
                    o[:, k] = ok
                masks = o @ powers[:d]
                for mask in np.unique(masks):
                    rows = np.flatnonzero(masks == mask)
                    vec = self._phi_for_mask(int(mask), leaf.z, d)
                    phi[np.ix_(rows, leaf.feats)] += scale * vec
        return phi

    def _phi_for_mask(self, mask, z, d):
        in_a = np.array([(mask >> k) & 1 for k in range(d)], dtype=bool)
        za = z[in_a]
        a = za.size
        zb_prod = float(z[~in_a].prod()) if a < d else 1.0
        w = self._w(d)
        e = np.zeros(a + 1)
        e[0] = 1.0
        for t in za:
            e[1:] += t * e[:-1]
        vec = np.empty(d)
        if a:
            em = np.empty((a, a))
            em[:, 0] = 1.0
            for m in range(1, a):
                em[:, m] = e[m] - za * em[:, m - 1]
            s = em[:, ::-1] @ w[:a]
            vec[in_a] = (1.0 - za) * zb_prod * s
        if a < d:
            vec[~in_a] = -zb_prod * float(w[: a + 1] @ e[::-1])
        return vec

    def explain(self, x):
        x = np.asarray(x, dtype=float).ravel()
        phi = self.shap_values(x[None, :])[0]
        return ShapExplanation(
            base_value=float(self.base_value),
            contributions=phi,
            feature_values=x,
            feature_names=self.feature_names,
        )


def tree_shap(model, x):
    """One-off SHAP explanation of a single record's margin."""
    return TreeExplainer(model).explain(x)


def linear_shap(model, x):
    """Exact additive attribution for a linear Cox margin.

    The margin is already a sum of per-feature terms around the training
    center, so the Shapley decomposition is beta_j * (x_j - center_j)
    with base value 0.
    """
    if isinstance(model, PenalizedCox):
        coef = model.coef_original_
    elif isinstance(model, CoxPH):
        coef = model.coef_
    else:
        raise TypeError(f"not a linear Cox model: {type(model).__name__}")
    x = np.asarray(x, dtype=float).ravel()
    if x.size != model.n_features_in_:
        raise ValueError(f"record has {x.size} features, model expects "
                         f"{model.n_features_in_}")
    return ShapExplanation(
        base_value=0.0,
        contributions=coef * (x - model.center_),
        feature_values=x,
        feature_names=tuple(model.feature_names_),
    )


@dataclass(frozen=True)
class SummaryData:
    feature_order: tuple       # names, most important first
    mean_abs: np.ndarray       # aligned with feature_order
    phi: np.ndarray            # (n, p) in original feature order
    values: np.ndarray         # (n, p) background feature values

    def to_dict(self):
        return {
            "feature_order": list(self.feature_order),
            "mean_abs": self.mean_abs.tolist(),
            "phi": self.phi.tolist(),
            "values": self.values.tolist(),
        }


def shap_summary(model, X_background):
    """Importance ranking plus the raw per-sample matrix for beeswarms."""
    X = np.atleast_2d(np.asarray(X_background, dtype=float))
    if X.shape[0] == 0:
        raise ValueError("background must be non-empty")
    explainer = TreeExplainer(model)
    phi = explainer.shap_values(X)
    mean_abs = np.abs(phi).mean(axis=0)
    order = np.argsort(-mean_abs, kind="stable")
    return SummaryData(
        feature_order=tuple(explainer.feature_names[j] for j in order),
        mean_abs=mean_abs[order],
        phi=phi,
        values=X,
    )


@dataclass(frozen=True)
class DependenceData:
    feature: str
    values: np.ndarray
    phi: np.ndarray
    partner: Optional[str]
    partner_values: Optional[np.ndarray]
    partner_scores: dict

    def to_dict(self):
        return {
            "feature": self.feature,
            "values": self.values.tolist(),
            "phi": self.phi.tolist(),
            "partner": self.partner,
            "partner_values": None if self.partner_values is None
            else self.partner_values.tolist(),
            "partner_scores": {k: float(v) for k, v in self.partner_scores.items()},
        }


def _interaction_score(phi_chosen, partner_values, bins):
    total = 0.0
    weight = 0
    for rows in bins:
        if rows.size < 3:
            continue
        pv = partner_values[rows]
        pc = phi_chosen[rows]
        if np.ptp(pv) == 0 or np.ptp(pc) == 0:
            continue
        r = np.corrcoef(pc, pv)[0, 1]
        if np.isfinite(r):
            total += abs(float(r)) * rows.size
            weight += rows.size
    return total / weight if weight else 0.0


def shap_dependence(model, X, feature, n_bins=10):
    """Dependence data with an auto-selected interaction partner.

    The partner is the feature whose values best explain the spread of
    the chosen feature's SHAP values within bins of the chosen feature
    (count-weighted mean |within-bin correlation|), ties broken by name.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    explainer = TreeExplainer(model)
    names = list(explainer.feature_names)
    if feature not in names:
        raise ValueError(f"unknown feature {feature!r}")
    j = names.index(feature)
    xv = X[:, j]
    if np.ptp(xv) == 0:
        raise ValueError(f"feature {feature!r} is constant in X; "
                         "dependence plot undefined")
    phi = explainer.shap_values(X)
    phi_j = phi[:, j]

    edges = np.unique(np.quantile(xv, np.linspace(0, 1, n_bins + 1)))
    which = np.clip(np.searchsorted(edges, xv, side="right") - 1, 0, edges.size - 2)
    bins = [np.flatnonzero(which == b) for b in range(edges.size - 1)]

    scores = {}
    for q, name in enumerate(names):
        if q == j:
            continue
        scores[name] = _interaction_score(phi_j, X[:, q], bins)
    partner = None
    if scores:
        best = max(scores.values())
        partner = min(n for n, s in scores.items() if s == best)
    return DependenceData(
        feature=feature,
        values=xv,
        phi=phi_j,
        partner=partner,
        partner_values=None if partner is None else X[:, names.index(partner)],
        partner_scores=scores,
    )


@dataclass(frozen=True)
class WaterfallData:
    base_value: float
    rows: tuple          # dicts: name, value, phi, cumulative
    margin: float

    def to_dict(self):
        return {
            "base_value": self.base_value,
            "rows": [dict(r) for r in self.rows],
            "margin": self.margin,
        }


def waterfall_data(explanation, top_k=8):
    """Waterfall rows from base value to margin, largest |phi| first.

    Zero contributions never get their own bar; everything beyond the
    top_k largest folds into a single "remaining" row so the cumulative
    sum still lands exactly on the margin.
    """
    if top_k < 1:
        raise ValueError("top_k must be >= 1")
    phi = explanation.contributions
    nonzero = np.flatnonzero(phi)
    order = nonzero[np.argsort(-np.abs(phi[nonzero]), kind="stable")]
    shown = order[:top_k]
    rest = phi.sum() - phi[shown].sum()
    rows = []
    running = explanation.base_value
    for j in shown:
        running += float(phi[j])
        rows.append({
            "name": explanation.feature_names[j],
            "value": float(explanation.feature_values[j]),
            "phi": float(phi[j]),
            "cumulative": running,
        })
    if order.size > top_k or order.size == 0:
        running += float(rest)
        rows.append({
            "name": "remaining",
            "value": None,
            "phi": float(rest),
            "cumulative": running,
        })
    return WaterfallData(
        base_value=float(explanation.base_value),
        rows=tuple(rows),
        margin=explanation.margin,
    )


def survival_overlay(model, record, cohort_values, times):
    """Individual survival curve next to the cohort-average curve."""
    from .ensemble import predict_survival_any

    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or times.size == 0 or np.any(np.diff(times) <= 0):
        raise ValueError("times must be a non-empty ascending vector")
    record = np.asarray(record, dtype=float).ravel()
    individual = predict_survival_any(model, record[None, :], times)[0]
    curves = predict_survival_any(model, np.atleast_2d(cohort_values), times)
    return individual, curves.mean(axis=0)
