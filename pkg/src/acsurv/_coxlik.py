"""Cox partial likelihood internals (Breslow tie handling).

Risk sets are computed once per call from suffix sums over time-sorted
arrays, so every routine here is O(n log n) plus O(n p) or O(n p^2) work.
Linear predictors are shifted by their maximum before exponentiation,
which leaves the partial likelihood unchanged and avoids overflow.
"""

import numpy as np


def _sorted_views(event, time, *arrays):
    order = np.argsort(time, kind="mergesort")
    out = [order, time[order], event[order].astype(float)]
    out.extend(a[order] for a in arrays)
    return out


def cox_loss(event, time, margins):
    """Negative Breslow partial log-likelihood at per-subject margins."""
    event = np.asarray(event, dtype=bool)
    time = np.asarray(time, dtype=float)
    margins = np.asarray(margins, dtype=float)
    _, t_s, e_s, f_s = _sorted_views(event, time, margins)
    shift = f_s.max() if f_s.size else 0.0
    w = np.exp(f_s - shift)
    _, first = np.unique(t_s, return_index=True)
    d = np.add.reduceat(e_s, first)
    s0 = np.cumsum(np.add.reduceat(w, first)[::-1])[::-1]
    loglik = float(np.sum(f_s * e_s) - np.sum(d * (np.log(s0) + shift)))
    return -loglik


def cox_gradients(event, time, margins):
    """Per-subject negative gradient and curvature of the Cox loss.

    Returns (g, h) where, writing w_i = exp(f_i) and S0_j for the risk-set
    sum of w at the j-th distinct event time,

        g_i = delta_i - w_i * sum_{t_j <= t_i} d_j / S0_j
        h_i = w_i * sum_{t_j <= t_i} d_j / S0_j
              - w_i^2 * sum_{t_j <= t_i} d_j / S0_j^2

    g is the descent residual (minus the loss gradient) and h is the
    diagonal of the loss Hessian, always >= 0.
    """
    event = np.asarray(event, dtype=bool)
    time = np.asarray(time, dtype=float)
    margins = np.asarray(margins, dtype=float)
    order, t_s, e_s, f_s = _sorted_views(event, time, margins)
    shift = f_s.max() if f_s.size else 0.0
    w = np.exp(f_s - shift)
    times, first = np.unique(t_s, return_index=True)
    d = np.add.reduceat(e_s, first)
    s0 = np.cumsum(np.add.reduceat(w, first)[::-1])[::-1]

    # cumulative d_j / S0_j over event times up to and including t_i
    a_terms = np.cumsum(d / s0)
    b_terms = np.cumsum(d / s0**2)
    pos = np.searchsorted(times, t_s, side="right") - 1
    a_i = a_terms[pos]
    b_i = b_terms[pos]

    g_sorted = e_s - w * a_i
    h_sorted = w * a_i - w**2 * b_i
    g = np.empty_like(g_sorted)
    h = np.empty_like(h_sorted)
    g[order] = g_sorted
    h[order] = np.maximum(h_sorted, 0.0)
    return g, h


def cox_loglik_full(X, event, time, beta):
    """Partial log-likelihood, gradient and negated Hessian at beta.

    The returned matrix V = -d2(loglik)/dbeta2 is positive semidefinite.
    """
    X = np.asarray(X, dtype=float)
    event = np.asarray(event, dtype=bool)
    time = np.asarray(time, dtype=float)
    eta = X @ beta
    order = np.argsort(time, kind="mergesort")
    t_s = time[order]
    e_s = event[order].astype(float)
    x_s = X[order]
    f_s = eta[order]
    shift = f_s.max()
    w = np.exp(f_s - shift)

    times, first = np.unique(t_s, return_index=True)
    d = np.add.reduceat(e_s, first)
    s0 = np.cumsum(np.add.reduceat(w, first)[::-1])[::-1]

    wx = w[:, None] * x_s
    s1 = np.add.reduceat(wx, first, axis=0)[::-1].cumsum(axis=0)[::-1]

    wxx = wx[:, :, None] * x_s[:, None, :]
    s2 = np.add.reduceat(wxx, first, axis=0)[::-1].cumsum(axis=0)[::-1]

    loglik = float(np.sum(f_s * e_s) - np.sum(d * (np.log(s0) + shift)))
    mu = s1 / s0[:, None]
    grad = (e_s[:, None] * x_s).sum(axis=0) - (d[:, None] * mu).sum(axis=0)
    v = np.einsum("j,jkl->kl", d, s2 / s0[:, None, None])
    v -= np.einsum("j,jk,jl->kl", d, mu, mu)
    return loglik, grad, v
