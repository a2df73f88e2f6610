"""Tree ensembles for survival: boosted Cox margins and a log-rank forest."""

import numpy as np

from ..cox import CoxPH, PenalizedCox
from ..nonparametric import survival_from_cumhaz
from ..stepfun import StepFunction
from .boosting import PRESETS, GradientBoostedCox
from .forest import RandomSurvivalForest, logrank_statistic
from .tree import GrowParams, TreeArrays, encode_columns, grow_tree

MARGIN_MODELS = (CoxPH, PenalizedCox, GradientBoostedCox)


def predict_margin(model, X):
    """Risk margin for any fitted model family (higher = higher risk)."""
    return model.predict(np.atleast_2d(np.asarray(X, dtype=float)))


def predict_survival_any(model, X, times):
    """S(t|x) rows for any fitted model family, sampled at ``times``.

    Margin models go through their Breslow baseline; the forest averages
    leaf cumulative hazards directly.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    times = np.asarray(times, dtype=float)
    if isinstance(model, RandomSurvivalForest):
        return model.predict_survival(X, times)
    if isinstance(model, MARGIN_MODELS):
        return survival_from_cumhaz(model.baseline_cumhaz_, model.predict(X), times)
    raise TypeError(f"unsupported model type {type(model).__name__}")


def survival_curve_for(model, x, times):
    """Single-record convenience wrapper returning a StepFunction."""
    values = predict_survival_any(model, np.atleast_2d(x), times)[0]
    return StepFunction(times, values, baseline=1.0)


__all__ = [
    "PRESETS",
    "GradientBoostedCox",
    "RandomSurvivalForest",
    "logrank_statistic",
    "GrowParams",
    "TreeArrays",
    "encode_columns",
    "grow_tree",
    "predict_margin",
    "predict_survival_any",
    "survival_curve_for",
]
