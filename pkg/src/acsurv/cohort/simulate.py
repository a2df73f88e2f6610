"""Ground-truth cohort simulator.

Features are drawn independently from the published marginals
(renormalised over the answered share).  Event times follow a Cox model
with Weibull baseline H0(t) = (t/scale)^shape and linear predictor

    r(x) = sum_j beta_j (x_j - center_j) + sum interactions

where centers are the analytic marginal means, so r averages near zero.
An optional late-time effect rescales r by ``late_scale`` after
``late_break_days``, degrading long-horizon discrimination while leaving
the model analytic: the piecewise cumulative hazard inverts in closed
form.  Censoring combines an administrative follow-up window with an
exponential censor whose rate is tuned by bisection until the event
fraction lands within the configured tolerance of the target.
"""

import hashlib
import json
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from ..errors import SimulationError
from .schema import (
    DIAGNOSIS_PREVALENCE,
    FEATURE_BY_NAME,
    FEATURE_NAMES,
    Cohort,
    FeatureMeta,
    canonical_feature,
)

DEFAULT_COEFFICIENTS = {
    "age_value": 0.045,
    "gender_male": 0.25,
    "falls_history": 0.10,
    "chess_scale_score": 0.30,
    "rx_risk_score": 0.04,
    "specific_health_conditions": 0.12,
    "cognitive_performance_scale_score": 0.10,
    "depression_rating_scale_score": 0.06,
    "weight_loss": 0.30,
    "poor_eating_or_lack_of_appetite": 0.35,
    "mobilisation": 0.25,
    "mobility_equipment": 0.06,
    "smoking": 0.12,
    "sleep_assist": 0.10,
    "skin_integrity_score": 0.15,
    "pressure_ulcer_risk_score": 0.12,
    "faecal_incontinence": 0.15,
    "urinary_incontinence": 0.08,
}


@dataclass
class SimConfig:
    n: int = 12000
    features: tuple = FEATURE_NAMES
    coefficients: dict = field(default_factory=lambda: dict(DEFAULT_COEFFICIENTS))
    interactions: list = field(default_factory=list)
    baseline_shape: float = 1.1
    baseline_scale: float = 620.0
    event_fraction_target: Optional[float] = 0.56
    censor_tolerance: float = 0.03
    admin_censor_range: Optional[tuple] = (30, 2250)
    missing_rates: dict = field(default_factory=dict)
    late_break_days: Optional[float] = None
    late_scale: float = 1.0

    def __post_init__(self):
        self.features = tuple(canonical_feature(f) for f in self.features)
        self.coefficients = {
            canonical_feature(k): float(v) for k, v in self.coefficients.items()
        }
        self.interactions = [
            (canonical_feature(a), canonical_feature(b), float(c))
            for a, b, c in self.interactions
        ]
        self.missing_rates = {
            canonical_feature(k): float(v) for k, v in self.missing_rates.items()
        }
        for name in list(self.coefficients) + list(self.missing_rates):
            if name not in self.features:
                raise ValueError(f"{name} is not among the configured features")
        for a, b, _ in self.interactions:
            if a not in self.features or b not in self.features:
                raise ValueError(f"interaction ({a}, {b}) uses an absent feature")

    def to_dict(self):
        d = asdict(self)
        d["features"] = list(self.features)
        d["interactions"] = [list(t) for t in self.interactions]
        d["admin_censor_range"] = (
            list(self.admin_censor_range) if self.admin_censor_range else None
        )
        return d

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        if d.get("admin_censor_range"):
            d["admin_censor_range"] = tuple(d["admin_censor_range"])
        if "interactions" in d:
            d["interactions"] = [tuple(t) for t in d["interactions"]]
        if "features" in d:
            d["features"] = tuple(d["features"])
        return cls(**d)

    def to_json(self, path=None):
        text = json.dumps(self.to_dict(), indent=2, sort_keys=True)
        if path is not None:
            with open(path, "w", encoding="utf-8") as fh:
                fh.write(text + "\n")
        return text

    @classmethod
    def from_json(cls, path):
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))

    def config_hash(self):
        return hashlib.sha256(
            json.dumps(self.to_dict(), sort_keys=True).encode()
        ).hexdigest()[:16]


def table_missing_rates():
    """Missing rates mirroring the published predictor table."""
    return {
        name: FEATURE_BY_NAME[name].missing_pct / 100.0
        for name in FEATURE_NAMES
        if FEATURE_BY_NAME[name].missing_pct > 0
    }


def _feature_marginal(name):
    """(values, probabilities, mean) for one feature's published marginal."""
    spec = FEATURE_BY_NAME[name]
    if name == "rx_risk_score":
        k = np.arange(spec.lo, spec.hi + 1)
        # no published distribution for the summed score; a broad bell
        # around 5 keeps the support and a clinically plausible spread
        p = np.exp(-0.5 * ((k - 5.0) / 4.5) ** 2)
        p /= p.sum()
        return k.astype(float), p, float(k @ p)
    if name == "specific_health_conditions":
        return None, None, float(sum(DIAGNOSIS_PREVALENCE.values()))
    codes, probs = spec.code_marginal()
    return codes, probs, float(codes @ probs)


class GroundTruth:
    """Analytic generating model behind a simulated cohort."""

    def __init__(self, config, centers, complete_values, margins):
        self.config = config
        self.centers = centers
        self.complete_values = complete_values
        self.margins = margins
        self.coefficients = np.array(
            [config.coefficients.get(f, 0.0) for f in config.features]
        )

    def margin_of(self, values):
        """r(x) for rows of complete feature values (config feature order)."""
        values = np.atleast_2d(np.asarray(values, dtype=float))
        c = np.array([self.centers[f] for f in self.config.features])
        r = (values - c) @ self.coefficients
        names = list(self.config.features)
        for a, b, coef in self.config.interactions:
            ia, ib = names.index(a), names.index(b)
            r += coef * (values[:, ia] - c[ia]) * (values[:, ib] - c[ib])
        return r

    def cumulative_hazard(self, times, margins):
        cfg = self.config
        times = np.asarray(times, dtype=float)
        margins = np.asarray(margins, dtype=float)
        h0 = (times / cfg.baseline_scale) ** cfg.baseline_shape
        rel = np.exp(margins)
        if cfg.late_break_days is None:
            return np.outer(rel, h0)
        h0_break = (cfg.late_break_days / cfg.baseline_scale) ** cfg.baseline_shape
        rel_late = np.exp(cfg.late_scale * margins)
        early = np.minimum(h0, h0_break)
        late = np.maximum(h0 - h0_break, 0.0)
        return np.outer(rel, early) + np.outer(rel_late, late)

    def survival(self, times, margins):
        """Analytic S(t | x) on a grid; shape (len(margins), len(times))."""
        return np.exp(-self.cumulative_hazard(times, margins))

    def sample_event_times(self, margins, rng):
        """Continuous event times by closed-form inversion of H(t|x)."""
        cfg = self.config
        e = rng.exponential(size=margins.shape[0])
        rel = np.exp(margins)
        inv_shape = 1.0 / cfg.baseline_shape
        if cfg.late_break_days is None:
            return cfg.baseline_scale * (e / rel) ** inv_shape
        h0_break = (cfg.late_break_days / cfg.baseline_scale) ** cfg.baseline_shape
        e_break = h0_break * rel
        rel_late = np.exp(cfg.late_scale * margins)
        before = cfg.baseline_scale * (e / rel) ** inv_shape
        # negative bases only occur in lanes the mask discards
        tail = np.maximum(h0_break + (e - e_break) / rel_late, 0.0)
        after = cfg.baseline_scale * tail ** inv_shape
        return np.where(e <= e_break, before, after)


def simulate_cohort(config, seed):
    """Draw a cohort and its generating truth; bit-reproducible per seed."""
    rng = np.random.default_rng(seed)
    n = int(config.n)
    feats = config.features
    p = len(feats)

    values = np.empty((n, p))
    centers = {}
    for j, name in enumerate(feats):
        codes, probs, mean = _feature_marginal(name)
        centers[name] = mean
        if codes is None:
            draws = np.zeros(n)
            for prev in DIAGNOSIS_PREVALENCE.values():
                draws += rng.random(n) < prev
            values[:, j] = draws
        else:
            values[:, j] = rng.choice(codes, size=n, p=probs) if n else np.empty(0)

    truth = GroundTruth(config, centers, values.copy(), None)
    margins = truth.margin_of(values) if n else np.zeros(0)
    truth.margins = margins

    t_cont = truth.sample_event_times(margins, rng) if n else np.zeros(0)
    t_day = np.maximum(np.ceil(t_cont), 1.0)

    target = config.event_fraction_target
    if n == 0 or target is None or target >= 1.0:
        time = t_day.astype(int)
        event = np.ones(n, dtype=int)
    else:
        if config.admin_censor_range is not None:
            lo, hi = config.admin_censor_range
            admin = rng.integers(int(lo), int(hi) + 1, size=n).astype(float)
        else:
            admin = np.full(n, np.inf)
        u = rng.random(n)

        def event_fraction(rate):
            if rate <= 0:
                c_day = admin
            else:
                c_day = np.minimum(admin, np.ceil(-np.log(u) / rate))
            return float((t_day <= c_day).mean()), c_day

        tol = config.censor_tolerance
        frac0, c_day = event_fraction(0.0)
        if frac0 < target - tol:
            raise SimulationError(
                f"cannot reach event fraction {target:.2f}: administrative "
                f"censoring alone leaves only {frac0:.3f}"
            )
        if frac0 > target + tol:
            rate_lo, rate_hi = 0.0, 1e-6
            frac_hi, _ = event_fraction(rate_hi)
            expansions = 0
            while frac_hi > target and expansions < 60:
                rate_hi *= 10
                frac_hi, _ = event_fraction(rate_hi)
                expansions += 1
            achieved = frac0
            for _ in range(200):
                mid = 0.5 * (rate_lo + rate_hi)
                achieved, c_day = event_fraction(mid)
                if abs(achieved - target) <= tol:
                    break
                if achieved > target:
                    rate_lo = mid
                else:
                    rate_hi = mid
            else:
                raise SimulationError(
                    f"censor-rate tuning failed; best achieved event "
                    f"fraction {achieved:.3f} vs target {target:.2f}"
                )
        event = (t_day <= c_day).astype(int)
        time = np.minimum(t_day, c_day).astype(int)

    for j, name in enumerate(feats):
        rate = config.missing_rates.get(name, 0.0)
        if rate > 0 and n:
            mask = rng.random(n) < rate
            values[mask, j] = np.nan

    reasons = np.where(event == 1, "none", "current_resident").astype(object)
    meta = [
        FeatureMeta(
            name,
            FEATURE_BY_NAME[name].lo,
            FEATURE_BY_NAME[name].hi,
            float(np.isnan(values[:, j]).mean()) if n else 0.0,
        )
        for j, name in enumerate(feats)
    ]
    cohort = Cohort(values, time, event, reasons, feature_meta=meta)
    return cohort, truth
