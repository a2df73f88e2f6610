"""Cox proportional hazards estimators.

``CoxPH`` maximises the Breslow partial likelihood by Newton-Raphson with
step halving.  ``PenalizedCox`` solves the elastic-net penalised problem

    nll(beta) / n + alpha * (l1_ratio * |beta|_1 + (1 - l1_ratio) / 2 * |beta|_2^2)

by iteratively reweighted least squares with coordinate-descent inner
sweeps, in the style of glmnet.  Both report coefficients on the scale of
the original features and attach a Breslow baseline so survival curves
can be produced directly.
"""

from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from ._coxlik import cox_gradients, cox_loglik_full, cox_loss
from .errors import ConvergenceError
from .nonparametric import breslow_baseline, check_survival_target, survival_from_cumhaz


@dataclass
class ConvergenceReport:
    converged: bool
    n_iter: int
    max_gradient: float
    loglik_trace: list = field(default_factory=list)
    message: str = ""

    def to_dict(self):
        return {
            "converged": self.converged,
            "n_iter": self.n_iter,
            "max_gradient": self.max_gradient,
            "loglik_trace": list(self.loglik_trace),
            "message": self.message,
        }


def _validate_design(X, y):
    X = check_array(X, dtype=float, ensure_min_samples=2)
    event, time = check_survival_target(y)
    if X.shape[0] != time.shape[0]:
        raise ValueError("X and y have different numbers of rows")
    if int(event.sum()) < 2:
        raise ValueError("need at least two observed events to fit")
    spans = np.ptp(X, axis=0)
    flat = np.flatnonzero(spans == 0)
    if flat.size:
        raise ValueError(f"zero-variance columns at indices {flat.tolist()}; drop them first")
    return X, event, time


def _resolve_names(feature_names, p):
    if feature_names is None:
        return [f"x{j}" for j in range(p)]
    names = [str(n) for n in feature_names]
    if len(names) != p:
        raise ValueError("feature_names length does not match X")
    return names


class CoxPH(BaseEstimator):
    """Unpenalised Cox proportional hazards model.

    Features are mean-centred internally, which leaves the coefficients
    unchanged and keeps the exponentials well scaled; ``predict`` returns
    the centred linear predictor coef @ (x - center_).

    ``tol`` bounds the gradient per event, not in absolute terms: the
    likelihood is a sum over events, so its float noise floor grows with
    the cohort and a fixed absolute cutoff would spuriously fail large
    fits that are already at machine precision.

    Attributes after fit: ``coef_``, ``center_``, ``baseline_cumhaz_``,
    ``convergence_``, ``feature_names_``, ``event_times_``.
    """

    def __init__(self, tol=1e-6, max_iter=100):
        self.tol = tol
        self.max_iter = max_iter

    def fit(self, X, y, feature_names=None):
        X, event, time = _validate_design(X, y)
        self.feature_names_ = _resolve_names(feature_names, X.shape[1])
        self.n_features_in_ = X.shape[1]
        self.center_ = X.mean(axis=0)
        xc = X - self.center_

        beta = np.zeros(X.shape[1])
        trace = []
        loglik, grad, v = cox_loglik_full(xc, event, time, beta)
        trace.append(loglik)
        converged = False
        message = ""
        it = 0
        grad_cutoff = self.tol * max(1.0, float(event.sum()))
        for it in range(1, self.max_iter + 1):
            max_grad = float(np.abs(grad).max())
            if max_grad < grad_cutoff:
                converged = True
                break
            try:
                delta = np.linalg.solve(v, grad)
            except np.linalg.LinAlgError:
                delta = np.linalg.solve(v + 1e-10 * np.eye(v.shape[0]), grad)
            step = 1.0
            while True:
                cand = beta + step * delta
                cand_ll = -cox_loss(event, time, xc @ cand)
                if cand_ll >= loglik - 1e-12:
                    break
                step *= 0.5
                if step < 1e-12:
                    cand = beta
                    cand_ll = loglik
                    break
            beta = cand
            loglik, grad, v = cox_loglik_full(xc, event, time, beta)
            trace.append(loglik)
        max_grad = float(np.abs(grad).max())
        if max_grad < grad_cutoff:
            converged = True
        if np.abs(beta).max() > 50:
            message = "coefficients diverged; data may exhibit monotone likelihood"
            converged = False
        self.convergence_ = ConvergenceReport(converged, it, max_grad, trace, message)
        if not converged:
            raise ConvergenceError(
                f"Newton did not converge in {it} iterations "
                f"(max |gradient| {max_grad:.3e}). {message}".strip(),
                last_coef=beta,
                n_iter=it,
            )
        self.coef_ = beta
        margins = xc @ beta
        self.baseline_cumhaz_, self.clip_count_ = breslow_baseline(
            event, time, margins, return_clip_count=True
        )
        self.event_times_ = np.unique(time[event])
        return self

    def predict(self, X):
        """Log relative hazard per row; higher means higher risk."""
        check_is_fitted(self, "coef_")
        X = check_array(X, dtype=float)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(
                f"expected {self.n_features_in_} features, got {X.shape[1]}"
            )
        return (X - self.center_) @ self.coef_

    def predict_survival(self, X, times):
        """S(t|x) = exp(-H0(t) exp(margin)) sampled at ``times``; shape (n, len(times))."""
        check_is_fitted(self, "coef_")
        return survival_from_cumhaz(self.baseline_cumhaz_, self.predict(X), times)


class PenalizedCox(BaseEstimator):
    """Elastic-net penalised Cox model solved by IRLS + coordinate descent.

    Parameters
    ----------
    alpha : float or None
        Penalty strength.  When None, ``alpha_min_ratio`` must be given and
        alpha is set to alpha_min_ratio * alpha_max, where alpha_max is the
        smallest penalty that zeroes every coefficient.
    l1_ratio : float in (0, 1]
        Mix between lasso (1.0) and ridge (towards 0).
    standardize : bool
        Centre and scale features before fitting (recommended; penalties
        are scale-sensitive).  Coefficients are reported on both scales.
    """

    def __init__(
        self,
        alpha=None,
        l1_ratio=1.0,
        standardize=True,
        alpha_min_ratio=None,
        max_iter=100,
        cd_max_iter=1000,
        tol=1e-7,
    ):
        self.alpha = alpha
        self.l1_ratio = l1_ratio
        self.standardize = standardize
        self.alpha_min_ratio = alpha_min_ratio
        self.max_iter = max_iter
        self.cd_max_iter = cd_max_iter
        self.tol = tol

    def _penalty(self, beta, alpha):
        l1 = np.abs(beta).sum()
        l2 = float(beta @ beta)
        return alpha * (self.l1_ratio * l1 + (1.0 - self.l1_ratio) / 2.0 * l2)

    def fit(self, X, y, feature_names=None):
        X, event, time = _validate_design(X, y)
        n, p = X.shape
        self.feature_names_ = _resolve_names(feature_names, p)
        self.n_features_in_ = p
        self.center_ = X.mean(axis=0)
        if self.standardize:
            self.scale_ = X.std(axis=0)
        else:
            self.scale_ = np.ones(p)
        xs = (X - self.center_) / self.scale_

        alpha = self.alpha
        if alpha is None:
            if self.alpha_min_ratio is None:
                raise ValueError("either alpha or alpha_min_ratio must be set")
            if self.l1_ratio < 1e-3:
                raise ValueError("alpha_min_ratio path needs l1_ratio >= 1e-3")
            g0, _ = cox_gradients(event, time, np.zeros(n))
            score = np.abs(xs.T @ (-g0)) / n
            alpha = float(score.max()) / self.l1_ratio * self.alpha_min_ratio
        self.alpha_ = float(alpha)

        thresh = self.alpha_ * self.l1_ratio
        ridge = self.alpha_ * (1.0 - self.l1_ratio)

        beta = np.zeros(p)
        eta = np.zeros(n)
        obj = cox_loss(event, time, eta) / n + self._penalty(beta, self.alpha_)
        trace = [-obj]
        converged = False
        message = ""
        it = 0
        for it in range(1, self.max_iter + 1):
            g, h = cox_gradients(event, time, eta)
            w = h
            live = w > 1e-12
            if not np.any(live):
                message = "all working weights vanished"
                break
            # z is the working response of the local quadratic model
            z = np.where(live, eta + g / np.where(live, w, 1.0), eta)
            wz_res = w * (z - eta)
            col_curv = (w[:, None] * xs**2).sum(axis=0) / n
            beta_new = beta.copy()
            eta_new = eta.copy()
            for _ in range(self.cd_max_iter):
                max_delta = 0.0
                for j in range(p):
                    num = wz_res @ xs[:, j] / n + col_curv[j] * beta_new[j]
                    bj = _soft_threshold(num, thresh) / (col_curv[j] + ridge)
                    change = bj - beta_new[j]
                    if change != 0.0:
                        beta_new[j] = bj
                        eta_new += xs[:, j] * change
                        wz_res -= w * xs[:, j] * change
                        max_delta = max(max_delta, abs(change))
                if max_delta < self.tol:
                    break
            obj_new = cox_loss(event, time, eta_new) / n + self._penalty(beta_new, self.alpha_)
            halvings = 0
            while obj_new > obj + 1e-12 and halvings < 20:
                beta_new = 0.5 * (beta_new + beta)
                eta_new = xs @ beta_new
                obj_new = cox_loss(event, time, eta_new) / n + self._penalty(
                    beta_new, self.alpha_
                )
                halvings += 1
            if obj_new > obj + 1e-12:
                message = "objective stopped improving; accepting previous iterate"
                converged = True
                break
            shift = float(np.abs(beta_new - beta).max())
            beta, eta, obj = beta_new, eta_new, obj_new
            trace.append(-obj)
            if shift < 10 * self.tol:
                converged = True
                break
        if not converged:
            raise ConvergenceError(
                f"IRLS did not converge in {it} iterations",
                last_coef=beta,
                n_iter=it,
            )
        self.convergence_ = ConvergenceReport(
            converged, it, float("nan"), trace, message
        )
        self.coef_ = beta
        self.coef_original_ = beta / self.scale_
        self.n_nonzero_ = int(np.count_nonzero(beta))
        margins = xs @ beta
        self.baseline_cumhaz_, self.clip_count_ = breslow_baseline(
            event, time, margins, return_clip_count=True
        )
        self.event_times_ = np.unique(time[event])
        return self

    def predict(self, X):
        """Log relative hazard coef @ (x - center) / scale."""
        check_is_fitted(self, "coef_")
        X = check_array(X, dtype=float)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(
                f"expected {self.n_features_in_} features, got {X.shape[1]}"
            )
        return ((X - self.center_) / self.scale_) @ self.coef_

    def predict_survival(self, X, times):
        check_is_fitted(self, "coef_")
        return survival_from_cumhaz(self.baseline_cumhaz_, self.predict(X), times)


def _soft_threshold(value, threshold):
    if value > threshold:
        return value - threshold
    if value < -threshold:
        return value + threshold
    return 0.0


def fit_univariate_coef(x, event, time):
    """Cox coefficient of a single feature, 0.0 when the fit fails.

    Used as a deterministic tie-breaker when pruning correlated features.
    """
    x = np.asarray(x, dtype=float)
    if np.ptp(x) == 0:
        return 0.0
    try:
        model = CoxPH(max_iter=50).fit(x[:, None], _pack(event, time))
    except (ConvergenceError, ValueError):
        return 0.0
    return float(model.coef_[0])


def _pack(event, time):
    from .nonparametric import survival_target

    return survival_target(event, time)
