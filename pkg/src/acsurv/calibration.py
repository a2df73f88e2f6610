"""Horizon binarization and Platt scaling of risk margins.

The scaler maps a model margin s (log-hazard scale, higher = riskier)
to a survival probability p(s) = 1/(1 + exp(A*s + B)).  It is a plain
logistic MLE of the binarized survival label on the margin; with the
survival orientation the fitted A is expected to be >= 0.

Censored-before-horizon rows carry no label and are excluded from the
fit (complete-case).  The exclusion count is kept on the scaler so
reports can show how much data the calibration actually saw.
"""

import csv
import io
import json
from dataclasses import dataclass, field

import numpy as np

from .errors import ConvergenceError, UndefinedMetricError

_SLOPE_BOUND = 80.0


def binarize_at_horizon(outcomes, horizon_days):
    """Binary survival label at a horizon, with an inclusion mask.

    Returns (labels, included).  Label 1: follow-up exceeds the horizon
    (alive or censored after it).  Label 0: died at or before it.
    Censored at or before the horizon: excluded, label slot unused.
    """
    event, time = outcomes
    event = np.asarray(event, dtype=bool)
    time = np.asarray(time, dtype=float)
    if horizon_days <= 0:
        raise ValueError("horizon_days must be positive")
    survived = time > horizon_days
    died = event & ~survived
    included = survived | died
    if not included.any():
        raise UndefinedMetricError(
            f"every subject is censored before day {horizon_days:g}; no labels"
        )
    labels = np.zeros(event.shape, dtype=int)
    labels[survived] = 1
    return labels, included


def _sigmoid(z):
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


@dataclass
class PlattScaler:
    """Fitted logistic map from margin to horizon survival probability."""

    slope: float
    intercept: float
    horizon_days: float
    n_fit: int
    n_excluded: int = 0
    converged: bool = True
    diagnostics: tuple = field(default_factory=tuple)

    def predict(self, scores):
        scores = np.asarray(scores, dtype=float)
        return _sigmoid(-(self.slope * scores + self.intercept))

    def to_dict(self):
        return {
            "slope": self.slope,
            "intercept": self.intercept,
            "horizon_days": self.horizon_days,
            "n_fit": self.n_fit,
            "n_excluded": self.n_excluded,
            "converged": self.converged,
            "diagnostics": list(self.diagnostics),
        }

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        d["diagnostics"] = tuple(d.get("diagnostics", ()))
        return cls(**d)


def fit_platt(risk_scores, labels, horizon_days=0.0, n_excluded=0, max_iter=100):
    """Logistic MLE of survival labels on risk scores, Newton iteration.

    Separation drives the slope toward infinity; the fit then stops at a
    bound and reports a diagnostic instead of failing.
    """
    s = np.asarray(risk_scores, dtype=float)
    y = np.asarray(labels, dtype=float)
    if s.shape != y.shape or s.ndim != 1:
        raise ValueError("scores and labels must be aligned 1-d arrays")
    if not np.isfinite(s).all():
        raise ValueError("scores must be finite")
    classes = np.unique(y)
    if not np.isin(classes, (0.0, 1.0)).all():
        raise ValueError("labels must be 0/1")
    if classes.size < 2:
        raise UndefinedMetricError("both classes required to fit a calibration map")

    diagnostics = []
    s1, s0 = s[y == 1.0], s[y == 0.0]
    if s1.max() < s0.min() or s0.max() < s1.min():
        diagnostics.append(
            "perfect separation: slope unbounded, stopped at bound; "
            "probabilities saturate"
        )

    # logistic params (w, b) for P(y=1|s) = sigmoid(w*s + b)
    w = 0.0
    b = float(np.log(y.mean() / (1.0 - y.mean())))
    converged = False
    scale = max(1.0, float(np.abs(s).max()))
    for _ in range(max_iter):
        z = w * s + b
        p = _sigmoid(z)
        r = y - p
        grad = np.array([s @ r, r.sum()])
        if np.max(np.abs(grad)) < 1e-9 * s.size:
            converged = True
            break
        wgt = p * (1.0 - p)
        h00 = (wgt * s * s).sum()
        h01 = (wgt * s).sum()
        h11 = wgt.sum()
        hess = np.array([[h00, h01], [h01, h11]])
        hess[np.diag_indices_from(hess)] += 1e-12
        try:
            step = np.linalg.solve(hess, grad)
        except np.linalg.LinAlgError:
            step = grad / max(h00, h11, 1.0)
        w += step[0]
        b += step[1]
        if not (np.isfinite(w) and np.isfinite(b)):
            raise ConvergenceError("calibration fit produced non-finite parameters")
        if abs(w) * scale > _SLOPE_BOUND:
            w = np.sign(w) * _SLOPE_BOUND / scale
            converged = True
            break
    if not converged:
        diagnostics.append(f"Newton did not converge in {max_iter} iterations")
    slope = -w
    intercept = -b
    if slope < 0:
        diagnostics.append(
            "negative calibration slope: higher risk mapped to higher survival; "
            "check score orientation"
        )
    return PlattScaler(
        slope=float(slope),
        intercept=float(intercept),
        horizon_days=float(horizon_days),
        n_fit=int(s.size),
        n_excluded=int(n_excluded),
        converged=converged,
        diagnostics=tuple(diagnostics),
    )


@dataclass(frozen=True)
class CalibrationCurve:
    bin_edges: np.ndarray
    mean_predicted: np.ndarray
    observed_fraction: np.ndarray
    counts: np.ndarray

    @property
    def n_bins(self):
        return self.counts.size

    def to_dict(self):
        empty = self.counts == 0
        return {
            "bin_edges": self.bin_edges.tolist(),
            "mean_predicted": [None if e else v for v, e in
                               zip(self.mean_predicted.tolist(), empty)],
            "observed_fraction": [None if e else v for v, e in
                                  zip(self.observed_fraction.tolist(), empty)],
            "counts": self.counts.tolist(),
        }

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2)

    def to_csv(self):
        buf = io.StringIO()
        writer = csv.writer(buf)
        writer.writerow(["bin_low", "bin_high", "mean_predicted",
                         "observed_fraction", "count"])
        for k in range(self.n_bins):
            empty = self.counts[k] == 0
            writer.writerow([
                f"{self.bin_edges[k]:g}",
                f"{self.bin_edges[k + 1]:g}",
                "" if empty else f"{self.mean_predicted[k]:.6f}",
                "" if empty else f"{self.observed_fraction[k]:.6f}",
                int(self.counts[k]),
            ])
        return buf.getvalue()


def calibration_curve(probs, labels, n_bins=10):
    """Reliability diagram data on equal-width bins over [0, 1].

    Empty bins keep NaN summaries and a zero count; the counts double as
    the prediction histogram.
    """
    probs = np.asarray(probs, dtype=float)
    labels = np.asarray(labels, dtype=float)
    if probs.shape != labels.shape or probs.ndim != 1:
        raise ValueError("probs and labels must be aligned 1-d arrays")
    if np.any(probs < 0) or np.any(probs > 1):
        raise ValueError("probabilities must lie in [0, 1]")
    if n_bins < 2:
        raise ValueError("n_bins must be >= 2")
    edges = np.linspace(0.0, 1.0, n_bins + 1)
    which = np.minimum((probs * n_bins).astype(int), n_bins - 1)
    counts = np.bincount(which, minlength=n_bins)
    sum_p = np.bincount(which, weights=probs, minlength=n_bins)
    sum_y = np.bincount(which, weights=labels, minlength=n_bins)
    with np.errstate(invalid="ignore", divide="ignore"):
        mean_p = np.where(counts > 0, sum_p / counts, np.nan)
        frac = np.where(counts > 0, sum_y / counts, np.nan)
    return CalibrationCurve(
        bin_edges=edges,
        mean_predicted=mean_p,
        observed_fraction=frac,
        counts=counts,
    )


def calibrated_predict(model, scaler, X, horizon_days):
    """Calibrated survival probability at a horizon, plus the raw curve value.

    Returns (calibrated, uncalibrated) arrays aligned with the rows of X.
    """
    from .ensemble import predict_margin, predict_survival_any

    if float(scaler.horizon_days) != float(horizon_days):
        raise ValueError(
            f"scaler was fitted for horizon {scaler.horizon_days:g}, "
            f"not {horizon_days:g}"
        )
    X = np.atleast_2d(np.asarray(X, dtype=float))
    margins = predict_margin(model, X)
    calibrated = scaler.predict(margins)
    uncalibrated = predict_survival_any(model, X, np.array([float(horizon_days)]))[:, 0]
    return calibrated, uncalibrated
