"""Gradient-boosted trees on the Cox partial-likelihood loss.

Two preset training styles share one trainer:

* ``gbm``: least-squares trees fitted to the negative gradient
  (depth <= 7, 4 candidate features per split, row subsample 0.83,
  optional DART-style dropout of prior trees when computing gradients).
* ``xgb``: second-order trees with leaf weight -G/(H+lambda)
  (depth <= 3, per-tree column subsample 0.83, row subsample 0.58,
  split gain threshold gamma).

Trees store raw leaf weights; the learning rate is applied at prediction
time, so margin(x) = learning_rate * sum of routed leaf values.  The
Breslow baseline is attached at the final training margins.
"""

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from .._coxlik import cox_gradients, cox_loss
from ..errors import ConvergenceError
from ..nonparametric import breslow_baseline, check_survival_target, survival_from_cumhaz
from .tree import GrowParams, encode_columns, grow_tree

PRESETS = {
    "gbm": dict(
        n_estimators=771,
        learning_rate=0.28,
        max_depth=7,
        min_samples_split=20,
        min_samples_leaf=1,
        subsample=0.83,
        colsample_bytree=None,
        max_features=4,
        reg_lambda=0.0,
        gamma=0.0,
        dropout_rate=0.05,
        second_order=False,
    ),
    "xgb": dict(
        n_estimators=1107,
        learning_rate=0.018,
        max_depth=3,
        min_samples_split=2,
        min_samples_leaf=1,
        subsample=0.58,
        colsample_bytree=0.83,
        max_features=None,
        reg_lambda=1.0,
        gamma=0.49,
        dropout_rate=0.0,
        second_order=True,
    ),
}


class GradientBoostedCox(BaseEstimator):
    """Boosted Cox model; ``preset`` supplies defaults for unset parameters.

    Attributes after fit include ``trees_`` (list of TreeArrays),
    ``loss_trace_`` (training loss per round, the round-0 entry is the
    null-margin loss), ``baseline_cumhaz_`` and ``split_counts_``.
    """

    def __init__(
        self,
        preset="xgb",
        n_estimators=None,
        learning_rate=None,
        max_depth=None,
        min_samples_split=None,
        min_samples_leaf=None,
        subsample=None,
        colsample_bytree=None,
        max_features=None,
        reg_lambda=None,
        gamma=None,
        dropout_rate=None,
        second_order=None,
        random_state=None,
    ):
        self.preset = preset
        self.n_estimators = n_estimators
        self.learning_rate = learning_rate
        self.max_depth = max_depth
        self.min_samples_split = min_samples_split
        self.min_samples_leaf = min_samples_leaf
        self.subsample = subsample
        self.colsample_bytree = colsample_bytree
        self.max_features = max_features
        self.reg_lambda = reg_lambda
        self.gamma = gamma
        self.dropout_rate = dropout_rate
        self.second_order = second_order
        self.random_state = random_state

    def _resolved(self):
        if self.preset is not None and self.preset not in PRESETS:
            raise ValueError(f"unknown preset {self.preset!r}; options: {sorted(PRESETS)}")
        base = dict(PRESETS[self.preset]) if self.preset else dict(PRESETS["xgb"])
        for key in base:
            override = getattr(self, key)
            if override is not None:
                base[key] = override
        return base

    def fit(self, X, y, feature_names=None):
        X = check_array(X, dtype=float)
        event, time = check_survival_target(y)
        if X.shape[0] != time.shape[0]:
            raise ValueError("X and y have different numbers of rows")
        if int(event.sum()) < 2:
            raise ValueError("need at least two observed events to fit")
        cfg = self._resolved()
        self.params_ = cfg
        self.n_features_in_ = X.shape[1]
        self.feature_names_ = (
            [str(n) for n in feature_names]
            if feature_names is not None
            else [f"x{j}" for j in range(X.shape[1])]
        )
        if len(self.feature_names_) != X.shape[1]:
            raise ValueError("feature_names length does not match X")

        n, p = X.shape
        rng = np.random.default_rng(self.random_state)
        codes, values = encode_columns(X)
        grow_params = GrowParams(
            max_depth=int(cfg["max_depth"]),
            min_samples_split=int(cfg["min_samples_split"]),
            min_samples_leaf=int(cfg["min_samples_leaf"]),
            reg_lambda=float(cfg["reg_lambda"]),
            gamma=float(cfg["gamma"]),
            max_features=cfg["max_features"],
        )
        eta = float(cfg["learning_rate"])
        dropout = float(cfg["dropout_rate"])
        subsample = float(cfg["subsample"])
        colsample = cfg["colsample_bytree"]

        margins = np.zeros(n)
        trees = []
        tree_contribs = [] if dropout > 0 else None
        loss_trace = [cox_loss(event, time, margins)]
        for m in range(int(cfg["n_estimators"])):
            if dropout > 0 and trees:
                drop = rng.random(len(trees)) < dropout
                grad_margins = margins.copy()
                for idx in np.flatnonzero(drop):
                    grad_margins -= tree_contribs[idx]
                # kept trees are re-scaled by 1/(1-rate) so the expected
                # margin matches the full ensemble
                grad_margins /= 1.0 - dropout
            else:
                grad_margins = margins

            residual, hess = cox_gradients(event, time, grad_margins)
            if not (np.isfinite(residual).all() and np.isfinite(hess).all()):
                raise ConvergenceError(f"non-finite gradients at boosting round {m}")
            g_loss = -residual
            h_tree = hess if cfg["second_order"] else np.ones(n)

            if subsample < 1.0:
                rows = rng.choice(n, size=max(2, int(round(subsample * n))), replace=False)
            else:
                rows = np.arange(n)
            subset = None
            if colsample is not None and colsample < 1.0:
                k = max(1, int(round(colsample * p)))
                subset = np.sort(rng.choice(p, size=k, replace=False))

            tree = grow_tree(
                codes[rows], values, g_loss[rows], h_tree[rows], grow_params,
                rng, feature_subset=subset,
            )
            contrib = eta * tree.predict(X)
            margins = margins + contrib
            trees.append(tree)
            if tree_contribs is not None:
                tree_contribs.append(contrib)
            loss_trace.append(cox_loss(event, time, margins))
            if not np.isfinite(loss_trace[-1]):
                raise ConvergenceError(f"non-finite loss at boosting round {m}")

        self.trees_ = trees
        self.loss_trace_ = loss_trace
        self.split_counts_ = (
            np.sum([t.split_feature_counts() for t in trees], axis=0)
            if trees
            else np.zeros(p, dtype=int)
        )
        self.baseline_cumhaz_, self.clip_count_ = breslow_baseline(
            event, time, margins, return_clip_count=True
        )
        self.event_times_ = np.unique(time[event])
        return self

    def predict(self, X):
        """Margin (log relative hazard): learning_rate * sum of leaf weights."""
        check_is_fitted(self, "trees_")
        X = check_array(X, dtype=float)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(
                f"expected {self.n_features_in_} features, got {X.shape[1]}"
            )
        out = np.zeros(X.shape[0])
        for tree in self.trees_:
            out += tree.predict(X)
        return self.params_["learning_rate"] * out

    def predict_survival(self, X, times):
        check_is_fitted(self, "trees_")
        return survival_from_cumhaz(self.baseline_cumhaz_, self.predict(X), times)
