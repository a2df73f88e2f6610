import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from acsurv._coxlik import cox_gradients, cox_loglik_full, cox_loss

from conftest import random_survival


def test_loss_two_subjects_hand_computed():
    event = np.array([True, True])
    time = np.array([1.0, 2.0])
    f = np.array([0.3, -0.7])
    expected = -(
        f[0] - np.log(np.exp(f[0]) + np.exp(f[1]))
        + f[1] - np.log(np.exp(f[1]))
    )
    assert cox_loss(event, time, f) == pytest.approx(expected, rel=1e-14)


def test_loss_breslow_ties_share_denominator():
    # two deaths tied at t=1 plus one censored later
    event = np.array([True, True, False])
    time = np.array([1.0, 1.0, 2.0])
    f = np.array([0.4, -0.1, 0.2])
    denom = np.log(np.exp(f).sum())
    expected = -(f[0] + f[1] - 2 * denom)
    assert cox_loss(event, time, f) == pytest.approx(expected, rel=1e-14)


def test_censored_subjects_contribute_only_to_risk_sets():
    event = np.array([True, False])
    time = np.array([1.0, 2.0])
    f = np.array([0.5, 1.5])
    expected = -(f[0] - np.log(np.exp(f[0]) + np.exp(f[1])))
    assert cox_loss(event, time, f) == pytest.approx(expected, rel=1e-14)


def _fd_gradient(fun, x, eps):
    g = np.zeros_like(x)
    for i in range(x.size):
        up, dn = x.copy(), x.copy()
        up[i] += eps
        dn[i] -= eps
        g[i] = (fun(up) - fun(dn)) / (2 * eps)
    return g


@settings(max_examples=25, deadline=None)
@given(st.integers(min_value=3, max_value=80), st.integers(min_value=0, max_value=2**31))
def test_per_sample_gradient_matches_finite_differences(n, seed):
    rng = np.random.default_rng(seed)
    event, time = random_survival(rng, n, censor_frac=0.3, ties=True)
    if not event.any():
        event[0] = True
    f = rng.normal(scale=0.8, size=n)
    g, h = cox_gradients(event, time, f)
    fd = _fd_gradient(lambda m: -cox_loss(event, time, m), f, eps=1e-5)
    assert np.allclose(g, fd, rtol=1e-4, atol=1e-6)
    assert (h >= 0).all()


def test_curvature_matches_second_differences():
    rng = np.random.default_rng(7)
    event, time = random_survival(rng, 60, censor_frac=0.3)
    f = rng.normal(scale=0.5, size=60)
    _, h = cox_gradients(event, time, f)
    eps = 5e-4
    for i in range(0, 60, 7):
        up, dn = f.copy(), f.copy()
        up[i] += eps
        dn[i] -= eps
        second = (cox_loss(event, time, up) - 2 * cox_loss(event, time, f)
                  + cox_loss(event, time, dn)) / eps**2
        assert h[i] == pytest.approx(second, rel=2e-3, abs=1e-5)


def test_full_likelihood_gradient_and_hessian_fd():
    rng = np.random.default_rng(11)
    X, event, time = random_survival(rng, 90, censor_frac=0.3, p=4,
                                     beta=[0.5, -0.3, 0.0, 0.2])
    beta = rng.normal(scale=0.3, size=4)
    ll, grad, neg_hess = cox_loglik_full(X, event, time, beta)

    fd_grad = _fd_gradient(
        lambda b: cox_loglik_full(X, event, time, b)[0], beta, eps=1e-6)
    assert np.allclose(grad, fd_grad, rtol=1e-4, atol=1e-7)

    eps = 1e-5
    for i in range(4):
        up, dn = beta.copy(), beta.copy()
        up[i] += eps
        dn[i] -= eps
        fd_row = (cox_loglik_full(X, event, time, up)[1]
                  - cox_loglik_full(X, event, time, dn)[1]) / (2 * eps)
        assert np.allclose(-neg_hess[i], fd_row, rtol=1e-4, atol=1e-6)

    eig = np.linalg.eigvalsh(neg_hess)
    assert eig.min() >= -1e-8


def test_gradient_sums_to_zero_without_censoring():
    # with all-events data the residuals must balance exactly
    rng = np.random.default_rng(5)
    event = np.ones(40, dtype=bool)
    time = rng.uniform(1, 100, size=40)
    f = rng.normal(size=40)
    g, _ = cox_gradients(event, time, f)
    assert abs(g.sum()) < 1e-10


def test_loss_invariant_to_margin_shift():
    rng = np.random.default_rng(9)
    event, time = random_survival(rng, 50, censor_frac=0.2)
    f = rng.normal(size=50)
    base = cox_loss(event, time, f)
    d_events = int(event.sum())
    # adding c to every margin changes the loss by exactly 0
    shifted = cox_loss(event, time, f + 3.7)
    assert shifted == pytest.approx(base, rel=1e-12)
    assert d_events > 0
