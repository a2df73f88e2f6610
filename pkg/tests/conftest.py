import numpy as np
import pytest

from acsurv.nonparametric import survival_target


def random_survival(rng, n, censor_frac=0.3, p=0, beta=None, ties=False):
    """Small survival dataset with optional linear signal and ties."""
    if p:
        X = rng.normal(size=(n, p))
        beta = np.zeros(p) if beta is None else np.asarray(beta, dtype=float)
        risk = X @ beta
    else:
        X = None
        risk = np.zeros(n)
    t_event = rng.exponential(scale=np.exp(-risk))
    t_cens = (rng.exponential(scale=t_event.mean() / max(censor_frac, 1e-9),
                              size=n)
              if censor_frac > 0 else np.full(n, np.inf))
    time = np.minimum(t_event, t_cens)
    event = t_event <= t_cens
    if ties:
        time = np.ceil(time * 8) / 8
    if X is None:
        return event, time
    return X, event, time


@pytest.fixture
def rng():
    return np.random.default_rng(42)


@pytest.fixture(scope="session")
def boosted_small():
    """A small fitted gradient-boosted model shared across read-only tests."""
    from acsurv.ensemble import GradientBoostedCox

    r = np.random.default_rng(3)
    n, p = 400, 5
    X = r.normal(size=(n, p))
    risk = 0.8 * X[:, 0] - 0.6 * X[:, 1] + 0.5 * X[:, 0] * X[:, 2]
    t_event = r.exponential(scale=np.exp(-risk))
    t_cens = r.exponential(scale=2.0, size=n)
    time = np.minimum(t_event, t_cens)
    event = t_event <= t_cens
    model = GradientBoostedCox(
        preset="xgb", n_estimators=60, random_state=0
    ).fit(X, survival_target(event, time),
          feature_names=[f"f{j}" for j in range(p)])
    return model, X, event, time
