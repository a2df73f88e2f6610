"""Non-parametric survival estimators on right-censored outcomes.

All functions take an event indicator (1 = death observed, 0 = censored)
and a positive follow-up time in days.  Ties are handled with the usual
convention that deaths at a time t precede censorings at t, which is
implicit in defining the risk set as everyone with follow-up >= t.
"""

import numpy as np

from .stepfun import StepFunction

SCORE_CLIP = 30.0


def survival_target(event, time):
    """Pack (event, time) into the structured target array used by estimators.

    Parameters
    ----------
    event : array-like of bool or {0, 1}
        1 when death was observed, 0 when the record is censored.
    time : array-like of float
        Positive follow-up in days.
    """
    event = np.asarray(event)
    time = np.asarray(time, dtype=float)
    if event.shape != time.shape or event.ndim != 1:
        raise ValueError("event and time must be 1-d arrays of equal length")
    y = np.empty(event.shape[0], dtype=[("event", bool), ("time", float)])
    y["event"] = event.astype(bool)
    y["time"] = time
    check_survival_target(y)
    return y


def check_survival_target(y):
    """Validate a structured survival target, returning (event, time) arrays."""
    if not isinstance(y, np.ndarray) or y.dtype.names != ("event", "time"):
        raise ValueError(
            "y must be a structured array with fields ('event', 'time'); "
            "build one with survival_target(event, time)"
        )
    event = y["event"].astype(bool)
    time = y["time"].astype(float)
    if time.size == 0:
        raise ValueError("empty outcome array")
    if not np.all(np.isfinite(time)) or np.any(time <= 0):
        raise ValueError("follow-up times must be finite and positive")
    return event, time


def event_table(event, time):
    """Count deaths, censorings and subjects at risk at each distinct time.

    Returns
    -------
    times : ndarray
        Distinct observed times, ascending.
    n_at_risk : ndarray
        Number with follow-up >= each time.
    n_events : ndarray
        Deaths at each time.
    n_censored : ndarray
        Censorings at each time.
    """
    event = np.asarray(event, dtype=bool)
    time = np.asarray(time, dtype=float)
    order = np.argsort(time, kind="mergesort")
    t_sorted = time[order]
    e_sorted = event[order].astype(float)
    times, first = np.unique(t_sorted, return_index=True)
    n_events = np.add.reduceat(e_sorted, first)
    group_sizes = np.add.reduceat(np.ones_like(t_sorted), first)
    n_at_risk = time.size - np.concatenate(([0.0], np.cumsum(group_sizes)[:-1]))
    return times, n_at_risk, n_events, group_sizes - n_events


def kaplan_meier(event, time):
    """Kaplan-Meier estimate of S(t) = P(T > t).

    The returned step function starts at 1.0 and changes value only at
    times where at least one death was observed.
    """
    times, n_at_risk, n_events, _ = event_table(event, time)
    factors = 1.0 - n_events / n_at_risk
    surv = np.cumprod(factors)
    mask = n_events > 0
    return StepFunction(times[mask], surv[mask], baseline=1.0)


def nelson_aalen(event, time):
    """Nelson-Aalen estimate of the cumulative hazard H(t) = sum d_j / n_j."""
    times, n_at_risk, n_events, _ = event_table(event, time)
    cumhaz = np.cumsum(n_events / n_at_risk)
    mask = n_events > 0
    return StepFunction(times[mask], cumhaz[mask], baseline=0.0)


def censoring_km(event, time):
    """Kaplan-Meier estimate of the censoring distribution G(t) = P(C > t).

    Computed by flipping the event indicator.  Used as the inverse
    probability weight source for IPCW metrics.
    """
    event = np.asarray(event, dtype=bool)
    return kaplan_meier(~event, time)


def breslow_baseline(event, time, scores, return_clip_count=False):
    """Breslow estimate of the baseline cumulative hazard under a Cox model.

    H0(t) = sum over death times t_j <= t of d_j / sum_{k: t_k >= t_j} exp(r_k)

    Scores are clipped to +-30 before exponentiation; pass
    ``return_clip_count=True`` to learn how many were affected.
    """
    event = np.asarray(event, dtype=bool)
    time = np.asarray(time, dtype=float)
    scores = np.asarray(scores, dtype=float)
    if scores.shape != time.shape:
        raise ValueError("scores must align with outcomes")
    n_clipped = int(np.count_nonzero(np.abs(scores) > SCORE_CLIP))
    w = np.exp(np.clip(scores, -SCORE_CLIP, SCORE_CLIP))

    order = np.argsort(time, kind="mergesort")
    t_sorted = time[order]
    e_sorted = event[order].astype(float)
    w_sorted = w[order]
    times, first = np.unique(t_sorted, return_index=True)
    n_events = np.add.reduceat(e_sorted, first)
    # suffix sums of exp(score) give the risk-set denominators
    group_w = np.add.reduceat(w_sorted, first)
    s0 = np.cumsum(group_w[::-1])[::-1]
    cumhaz = np.cumsum(n_events / s0)
    mask = n_events > 0
    fn = StepFunction(times[mask], cumhaz[mask], baseline=0.0)
    if return_clip_count:
        return fn, n_clipped
    return fn


def survival_from_cumhaz(cumhaz, margin, times):
    """Evaluate S(t|x) = exp(-H0(t) * exp(margin)) on a time grid.

    Parameters
    ----------
    cumhaz : StepFunction
        Baseline cumulative hazard H0.
    margin : float or ndarray of shape (n,)
        Log relative hazard per subject, clipped to +-30.
    times : array-like
        Evaluation grid.

    Returns
    -------
    ndarray of shape (n, len(times)) when margin is an array, else (len(times),).
    """
    times = np.asarray(times, dtype=float)
    h = cumhaz(times)
    margin = np.asarray(margin, dtype=float)
    rel = np.exp(np.clip(margin, -SCORE_CLIP, SCORE_CLIP))
    if margin.ndim == 0:
        return np.exp(-h * float(rel))
    return np.exp(-np.outer(rel, h))
