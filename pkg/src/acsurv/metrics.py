"""Censoring-aware discrimination and prediction-error metrics.

Conventions, fixed across the package:

* scores are risk scores: higher = higher risk = earlier expected death;
* the censoring distribution G comes from the Kaplan-Meier of the
  flipped event indicator, usually estimated on training outcomes;
* weights at an event time t_i use the left limit G(t_i-);
* a metric with no comparable information raises UndefinedMetricError
  rather than returning an arbitrary value.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import UndefinedMetricError
from .nonparametric import censoring_km

_PAIR_CHUNK = 512


@dataclass(frozen=True)
class MetricValue:
    name: str
    point: float
    ci_low: float
    ci_high: float
    n_repeats: int

    def __post_init__(self):
        if np.isfinite(self.point) and not (
            self.ci_low - 1e-12 <= self.point <= self.ci_high + 1e-12
        ):
            raise ValueError("CI must bracket the point estimate")

    def format(self, digits=3):
        if not np.isfinite(self.point):
            return "-"
        spec = f"%.{digits}f"
        return f"{spec % self.point} ({spec % self.ci_low}-{spec % self.ci_high})"

    def to_dict(self):
        def clean(v):
            return None if not np.isfinite(v) else v

        return {
            "name": self.name,
            "point": clean(self.point),
            "ci_low": clean(self.ci_low),
            "ci_high": clean(self.ci_high),
            "n_repeats": self.n_repeats,
        }

    @classmethod
    def from_dict(cls, d):
        def restore(v):
            return float("nan") if v is None else v

        return cls(
            name=d["name"],
            point=restore(d["point"]),
            ci_low=restore(d["ci_low"]),
            ci_high=restore(d["ci_high"]),
            n_repeats=d["n_repeats"],
        )


@dataclass(frozen=True)
class RocPoint:
    threshold: float
    tpr: float
    fpr: float
    tnr: float
    ppv: Optional[float]
    npv: Optional[float]

    def to_dict(self):
        return {
            "threshold": self.threshold,
            "tpr": self.tpr,
            "fpr": self.fpr,
            "tnr": self.tnr,
            "ppv": self.ppv,
            "npv": self.npv,
        }


def _check_aligned(event, time, scores):
    event = np.asarray(event, dtype=bool)
    time = np.asarray(time, dtype=float)
    scores = np.asarray(scores, dtype=float)
    if not (event.shape == time.shape == scores.shape) or event.ndim != 1:
        raise ValueError("event, time and scores must be aligned 1-d arrays")
    if not np.isfinite(scores).all():
        raise ValueError("scores must be finite")
    return event, time, scores


def harrell_cindex(event, time, scores):
    """Harrell's concordance over comparable pairs.

    A pair (i, j) is comparable when i died and j's follow-up exceeds
    t_i.  Concordant if score_i > score_j; score ties credit 0.5.
    """
    event, time, scores = _check_aligned(event, time, scores)
    num = 0.0
    den = 0.0
    idx = np.flatnonzero(event)
    for start in range(0, idx.size, _PAIR_CHUNK):
        i = idx[start : start + _PAIR_CHUNK]
        comparable = time[None, :] > time[i][:, None]
        diff = scores[i][:, None] - scores[None, :]
        num += (comparable * ((diff > 0) + 0.5 * (diff == 0))).sum()
        den += comparable.sum()
    if den == 0:
        raise UndefinedMetricError("no comparable pairs; concordance undefined")
    return float(num / den)


def ipcw_cindex(train_outcomes, test_scores, test_outcomes, tau=None):
    """Uno-style IPCW concordance truncated at tau.

    ``train_outcomes``/``test_outcomes`` are (event, time) tuples; the
    censoring Kaplan-Meier comes from the training outcomes.  Pairs with
    t_i < t_j and t_i <= tau are weighted G(t_i-)^-2.
    """
    tr_event, tr_time = train_outcomes
    event, time, scores = _check_aligned(*test_outcomes, test_scores)
    g = censoring_km(np.asarray(tr_event, dtype=bool), np.asarray(tr_time, dtype=float))
    if tau is None:
        if not event.any():
            raise UndefinedMetricError("no events in test outcomes")
        tau = float(time[event].max())
    support = g.x[g.y <= 0]
    if support.size and tau >= support.min():
        raise UndefinedMetricError(
            f"tau={tau:g} beyond censoring-KM support (G hits 0 at {support.min():g})"
        )
    g_left = np.asarray(g.left_limit(time), dtype=float)
    anchor = event & (time <= tau)
    if anchor.any() and np.any(g_left[anchor] <= 0):
        bad = time[anchor][g_left[anchor] <= 0].min()
        raise UndefinedMetricError(
            f"censoring survival is 0 at needed time {bad:g} (tau={tau:g})"
        )
    num = 0.0
    den = 0.0
    idx = np.flatnonzero(anchor)
    for start in range(0, idx.size, _PAIR_CHUNK):
        i = idx[start : start + _PAIR_CHUNK]
        comparable = time[None, :] > time[i][:, None]
        w = (1.0 / g_left[i] ** 2)[:, None] * comparable
        diff = scores[i][:, None] - scores[None, :]
        num += (w * ((diff > 0) + 0.5 * (diff == 0))).sum()
        den += w.sum()
    if den == 0:
        raise UndefinedMetricError("no comparable pairs at or before tau")
    return float(num / den)


def dynamic_auc(t, risk_scores, test_outcomes, censor_g):
    """Cumulative/dynamic AUC at horizon t.

    Cases are deaths at or before t, weighted 1/G(t_i-); controls are
    subjects still under follow-up past t.  ``censor_g`` is a censoring
    survival StepFunction (training-based in the harness).
    """
    event, time, scores = _check_aligned(*test_outcomes, risk_scores)
    cases = event & (time <= t)
    controls = time > t
    if not cases.any() or not controls.any():
        raise UndefinedMetricError(f"no cases or no controls at horizon {t:g}")
    g_left = np.asarray(censor_g.left_limit(time[cases]), dtype=float)
    if np.any(g_left <= 0):
        raise UndefinedMetricError(f"censoring survival is 0 before horizon {t:g}")
    w = 1.0 / g_left
    s_case = scores[cases]
    s_ctrl = scores[controls]
    num = 0.0
    for start in range(0, s_case.size, _PAIR_CHUNK):
        sc = s_case[start : start + _PAIR_CHUNK, None]
        wc = w[start : start + _PAIR_CHUNK, None]
        num += (wc * ((sc > s_ctrl[None, :]) + 0.5 * (sc == s_ctrl[None, :]))).sum()
    return float(num / (w.sum() * s_ctrl.size))


def brier_score(t, predicted_survival_at_t, test_outcomes, censor_g):
    """IPCW Brier score at horizon t (Graf).

    Deaths by t contribute S_hat^2 / G(t_i-); survivors past t contribute
    (1 - S_hat)^2 / G(t); censored before t contribute 0.  Denominator n.
    """
    s_hat = np.asarray(predicted_survival_at_t, dtype=float)
    event, time, s_hat = _check_aligned(test_outcomes[0], test_outcomes[1], s_hat)
    if np.any(s_hat < 0) or np.any(s_hat > 1):
        raise ValueError("predicted survival probabilities must lie in [0, 1]")
    died = event & (time <= t)
    alive = time > t
    total = np.zeros_like(s_hat)
    if died.any():
        g_left = np.asarray(censor_g.left_limit(time[died]), dtype=float)
        if np.any(g_left <= 0):
            raise UndefinedMetricError(f"censoring survival is 0 at an event time <= {t:g}")
        total[died] = s_hat[died] ** 2 / g_left
    if alive.any():
        g_t = float(censor_g(t))
        if g_t <= 0:
            raise UndefinedMetricError(f"censoring survival is 0 at horizon {t:g}")
        total[alive] = (1.0 - s_hat[alive]) ** 2 / g_t
    return float(total.mean())


def integrated_brier(t_grid, curves, test_outcomes, censor_g):
    """Trapezoidal integral of the Brier score over t_grid, span-normalised.

    ``curves`` has one row per subject, sampled at t_grid.
    """
    t_grid = np.asarray(t_grid, dtype=float)
    if t_grid.ndim != 1 or t_grid.size < 2 or np.any(np.diff(t_grid) <= 0):
        raise ValueError("t_grid must be >= 2 strictly ascending points")
    curves = np.asarray(curves, dtype=float)
    if curves.shape != (len(test_outcomes[0]), t_grid.size):
        raise ValueError("curves must be (n_subjects, len(t_grid))")
    scores = np.array(
        [brier_score(t, curves[:, k], test_outcomes, censor_g)
         for k, t in enumerate(t_grid)]
    )
    return float(np.trapezoid(scores, t_grid) / (t_grid[-1] - t_grid[0]))


def roc_with_clinical_metrics(survival_probs, binary_survival_labels):
    """ROC sweep with clinical rates; positive = survival prob >= threshold.

    Labels: 1 = survived the horizon.  Returns one RocPoint per distinct
    threshold plus the 0 and 1 boundaries, thresholds descending.  PPV
    and NPV are None where their denominator is empty.
    """
    probs = np.asarray(survival_probs, dtype=float)
    labels = np.asarray(binary_survival_labels, dtype=int)
    if probs.shape != labels.shape or probs.ndim != 1:
        raise ValueError("probs and labels must be aligned 1-d arrays")
    if np.any(probs < 0) or np.any(probs > 1):
        raise ValueError("probabilities must lie in [0, 1]")
    pos = labels == 1
    n_pos = int(pos.sum())
    n_neg = labels.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise UndefinedMetricError("ROC undefined with a single-class label vector")
    thresholds = np.unique(np.concatenate((probs, [0.0, 1.0])))[::-1]
    points = []
    for thr in thresholds:
        pred = probs >= thr
        tp = int((pred & pos).sum())
        fp = int((pred & ~pos).sum())
        fn = n_pos - tp
        tn = n_neg - fp
        points.append(
            RocPoint(
                threshold=float(thr),
                tpr=tp / n_pos,
                fpr=fp / n_neg,
                tnr=tn / n_neg,
                ppv=tp / (tp + fp) if (tp + fp) else None,
                npv=tn / (tn + fn) if (tn + fn) else None,
            )
        )
    return points


def aggregate_ci(values, name="metric"):
    """Mean with a normal-theory 95% CI across repeats.

    A single value yields a degenerate CI equal to the point.
    """
    arr = np.asarray([v for v in values if v is not None and np.isfinite(v)], dtype=float)
    if arr.size == 0:
        return MetricValue(name, float("nan"), float("nan"), float("nan"), 0)
    mean = float(arr.mean())
    if arr.size == 1:
        return MetricValue(name, mean, mean, mean, 1)
    half = 1.96 * float(arr.std(ddof=1)) / np.sqrt(arr.size)
    return MetricValue(name, mean, mean - half, mean + half, int(arr.size))
