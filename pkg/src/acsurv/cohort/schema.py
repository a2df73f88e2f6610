"""Feature schema: names, assessment questions, answer encodings, marginals.

Each predictor is an ordinal code.  ``answers`` maps the exact assessment
answer text to its code; several texts may share a code (e.g. weight loss
"No" and "Unsure" both encode 0).  ``pct`` carries the published cohort
percentage for each answer and ``missing_pct`` the unanswered share; the
simulator renormalises these over the non-missing mass.  Features without
an answer vocabulary (the comorbidity scores) validate by integer range.
"""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ..errors import SchemaError


@dataclass(frozen=True)
class FeatureSpec:
    name: str
    question: str
    lo: float
    hi: float
    # (answer text, code, cohort percent); empty for numeric-range features
    answers: tuple = ()
    missing_pct: float = 0.0
    integer_range: bool = False  # validate any integer in [lo, hi]

    @property
    def codes(self):
        return sorted({code for _, code, _ in self.answers})

    def allowed(self, value):
        if value is None or not np.isfinite(value):
            return False
        if self.integer_range:
            return self.lo <= value <= self.hi and float(value).is_integer()
        return any(value == code for code in self.codes)

    def code_marginal(self):
        """(codes, probabilities) renormalised over the answered share."""
        if not self.answers:
            raise SchemaError(f"{self.name} has no published answer marginal")
        codes = self.codes
        mass = {c: 0.0 for c in codes}
        for _, code, pct in self.answers:
            mass[code] += pct
        total = sum(mass.values())
        return np.array(codes, dtype=float), np.array(
            [mass[c] / total for c in codes]
        )


def _f(name, question, lo, hi, answers=(), missing_pct=0.0, integer_range=False):
    return FeatureSpec(name, question, lo, hi, tuple(answers), missing_pct, integer_range)


FEATURES = (
    _f(
        "age_value",
        "Age band at admission (years)",
        67, 100,
        [
            ("65-69", 67, 2.0),
            ("70-74", 72, 5.0),
            ("75-79", 77, 12.0),
            ("80-84", 82, 20.0),
            ("85-89", 87, 27.0),
            ("90-94", 92, 23.0),
            ("95-99", 97, 9.0),
            ("100+", 100, 1.0),
        ],
    ),
    _f(
        "gender_male",
        "Gender",
        0, 1,
        [
            ("Female", 0, 60.0),
            ("Male", 1, 38.0),
            ("Other/Gender Diverse", 0, 1.0),
            ("Unknown", 0, 1.0),
        ],
    ),
    _f(
        "falls_history",
        "History of falls",
        0, 3,
        [
            ("No history of falls", 0, 42.9),
            ("4 or less in last 6 months", 1, 44.1),
            ("5 or more in last 6 months", 2, 4.0),
            ("3 or more falls in one month period", 3, 2.6),
        ],
        missing_pct=6.4,
    ),
    _f(
        "chess_scale_score",
        "What was the CHESS scale score?",
        0, 5,
        [
            ("No symptoms", 0, 12.1),
            ("Minimal health instability", 1, 12.7),
            ("Low health instability", 2, 12.1),
            ("Moderate health instability", 3, 6.6),
            ("High health instability", 4, 3.2),
            ("Highest level of instability", 5, 0.5),
        ],
        missing_pct=52.7,
    ),
    _f(
        "rx_risk_score",
        "What was the weighted Rx-Risk scale score?",
        -3, 23,
        missing_pct=24.1,
        integer_range=True,
    ),
    _f(
        "specific_health_conditions",
        "Count of specific diagnoses present (dementia, heart, cancer, diabetes, lung)",
        0, 5,
        integer_range=True,
    ),
    _f(
        "cognitive_performance_scale_score",
        "What was the cognitive performance scale score?",
        0, 6,
        [
            ("Intact", 0, 5.3),
            ("Borderline intact", 1, 4.5),
            ("Mild impairment", 2, 17.8),
            ("Moderate impairment", 3, 12.8),
            ("Moderate/Severe impairment", 4, 1.7),
            ("Severe impairment", 5, 3.6),
            ("Very severe impairment", 6, 0.8),
        ],
        missing_pct=53.5,
    ),
    _f(
        "depression_rating_scale_score",
        "What was the depression rating scale score?",
        0, 3,
        [
            ("None (0)", 0, 21.8),
            ("Mild (1-2)", 1, 14.5),
            ("Moderate (3-5)", 2, 7.6),
            ("Severe (6-14)", 3, 2.6),
        ],
        missing_pct=53.5,
    ),
    _f(
        "weight_loss",
        "Has the resident lost weight recently?",
        0, 1,
        [("No", 0, 36.7), ("Unsure", 0, 43.9), ("Yes", 1, 13.8)],
        missing_pct=5.6,
    ),
    _f(
        "poor_eating_or_lack_of_appetite",
        "Is the resident eating poorly or has a lack of appetite?",
        0, 1,
        [("No", 0, 76.5), ("Yes", 1, 17.9)],
        missing_pct=5.6,
    ),
    _f(
        "mobilisation",
        "How does your resident mobilise?",
        0, 4,
        [
            ("Independent", 0, 34.9),
            ("Supervision or prompting", 1, 15.8),
            ("1 person assistance", 2, 20.1),
            ("2 person assistance", 3, 7.7),
            ("Does not mobilise (bed or chair bound)", 4, 9.7),
        ],
        missing_pct=11.8,
    ),
    _f(
        "mobility_equipment",
        "What equipment does your resident use to mobilise safely?",
        0, 5,
        [
            ("None", 0, 22.6),
            ("Walking stick", 1, 6.8),
            ("Walking frame", 2, 42.6),
            ("Transfer belt or other", 3, 1.7),
            ("Gutter frame", 4, 1.8),
            ("Wheelchair, fallout chair or lazyboy", 5, 9.5),
        ],
        missing_pct=11.8,
    ),
    _f(
        "smoking",
        "Has your resident smoked in the past?",
        0, 1,
        [("No", 0, 63.7), ("Yes", 1, 16.3)],
        missing_pct=20.0,
    ),
    _f(
        "sleep_assist",
        "Does your resident require assistance to settle to bed at night?",
        0, 1,
        [("No", 0, 32.3), ("Yes", 1, 55.5)],
        missing_pct=12.2,
    ),
    _f(
        "skin_integrity_score",
        "Has your resident's skin integrity changed since last assessment?",
        0, 2,
        [
            ("Improved", 0, 1.4),
            ("No Change", 0, 21.8),
            ("Fluctuated", 1, 1.3),
            ("Declined", 2, 4.4),
        ],
        missing_pct=71.0,
    ),
    _f(
        "pressure_ulcer_risk_score",
        "What was the Pressure Ulcer Risk scale?",
        0, 4,
        [
            ("Very low risk", 0, 22.0),
            ("Low risk", 1, 16.5),
            ("Moderate risk", 2, 4.6),
            ("High risk", 3, 2.9),
            ("Very high risk", 4, 0.3),
        ],
        missing_pct=53.7,
    ),
    _f(
        "faecal_incontinence",
        "Is the resident incontinent of faeces?",
        0, 1,
        [("No", 0, 25.9), ("Yes", 1, 18.3)],
        missing_pct=55.8,
    ),
    _f(
        "urinary_incontinence",
        "Is the resident incontinent of urine?",
        0, 1,
        [("No", 0, 31.9), ("Yes", 1, 13.0)],
        missing_pct=55.1,
    ),
)

FEATURE_NAMES = tuple(spec.name for spec in FEATURES)
FEATURE_BY_NAME = {spec.name: spec for spec in FEATURES}

# short aliases accepted anywhere a feature is named by hand
FEATURE_ALIASES = {
    "age": "age_value",
    "gender": "gender_male",
    "falls": "falls_history",
    "chess": "chess_scale_score",
    "rx_risk": "rx_risk_score",
    "cognition": "cognitive_performance_scale_score",
    "mood": "depression_rating_scale_score",
    "depression": "depression_rating_scale_score",
    "poor_eating": "poor_eating_or_lack_of_appetite",
    "skin_integrity": "skin_integrity_score",
    "pressure_ulcer": "pressure_ulcer_risk_score",
    "sleep": "sleep_assist",
}

# probabilities that each of the five tracked diagnoses is present,
# used to draw specific_health_conditions as a sum of indicators
DIAGNOSIS_PREVALENCE = {
    "dementia": 0.434,
    "heart": 0.306,
    "cancer": 0.109,
    "diabetes": 0.108,
    "lung": 0.093,
}

CENSOR_REASONS = (
    "none",
    "current_resident",
    "transfer_facility",
    "discharged_home",
    "transfer_hospital",
)

# discharge category -> (event indicator, censor reason)
DISCHARGE_OUTCOME = {
    "Deceased": (1, "none"),
    "Transfer to hospice": (1, "none"),
    "Current resident": (0, "current_resident"),
    "Transfer to another care facility": (0, "transfer_facility"),
    "Discharged home": (0, "discharged_home"),
    "Transfer to public hospital": (0, "transfer_hospital"),
}


def canonical_feature(name):
    """Resolve a feature name or alias; raises SchemaError when unknown."""
    key = str(name).strip()
    key = FEATURE_ALIASES.get(key.lower(), key)
    if key not in FEATURE_BY_NAME:
        raise SchemaError(f"unknown feature {name!r}")
    return key


def validate_value(feature_name, value):
    """Check a single ordinal value against its feature's schema."""
    spec = FEATURE_BY_NAME[canonical_feature(feature_name)]
    if not spec.allowed(value):
        raise SchemaError(
            f"{spec.name}={value!r} outside its allowed ordinal values "
            f"[{spec.lo:g}, {spec.hi:g}]"
        )
    return float(value)


@dataclass(frozen=True)
class FeatureMeta:
    """Per-feature cohort metadata carried alongside the value matrix."""

    name: str
    lo: float
    hi: float
    missing_rate: float

    def to_dict(self):
        return {
            "name": self.name,
            "lo": self.lo,
            "hi": self.hi,
            "missing_rate": self.missing_rate,
        }


@dataclass(frozen=True)
class ResidentRecord:
    """One resident's encoded predictors; absent keys are missing fields."""

    values: dict = field(default_factory=dict)

    def __post_init__(self):
        cleaned = {}
        for name, value in self.values.items():
            key = canonical_feature(name)
            if value is None:
                continue
            cleaned[key] = validate_value(key, value)
        object.__setattr__(self, "values", cleaned)

    def get(self, name):
        return self.values.get(canonical_feature(name))

    def is_missing(self, name):
        return canonical_feature(name) not in self.values

    def as_row(self, feature_names=FEATURE_NAMES):
        row = np.full(len(feature_names), np.nan)
        for j, name in enumerate(feature_names):
            if name in self.values:
                row[j] = self.values[name]
        return row

    def replace(self, name, value):
        key = canonical_feature(name)
        values = dict(self.values)
        if value is None:
            values.pop(key, None)
        else:
            values[key] = value
        return ResidentRecord(values)


@dataclass(frozen=True)
class SurvivalOutcome:
    time_days: int
    event: int
    censor_reason: str = "none"

    def __post_init__(self):
        if int(self.time_days) < 1:
            raise SchemaError(f"time_days must be >= 1, got {self.time_days}")
        if self.event not in (0, 1):
            raise SchemaError(f"event must be 0 or 1, got {self.event!r}")
        if self.censor_reason not in CENSOR_REASONS:
            raise SchemaError(f"unknown censor_reason {self.censor_reason!r}")
        if self.event == 1 and self.censor_reason != "none":
            raise SchemaError("event=1 requires censor_reason='none'")
        object.__setattr__(self, "time_days", int(self.time_days))
        object.__setattr__(self, "event", int(self.event))


class Cohort:
    """Aligned predictor matrix and outcomes, immutable after construction.

    ``values`` is (n, p) float64 with NaN marking missing cells; columns
    follow ``feature_meta`` order.  Use :meth:`from_records` at schema
    boundaries and the array attributes everywhere else.
    """

    def __init__(self, values, time_days, event, censor_reason=None, feature_meta=None):
        values = np.asarray(values, dtype=float)
        if values.ndim != 2:
            raise SchemaError("values must be a 2-d matrix")
        n, p = values.shape
        time_days = np.asarray(time_days, dtype=int)
        event = np.asarray(event, dtype=int)
        if time_days.shape != (n,) or event.shape != (n,):
            raise SchemaError("outcomes must align one-to-one with records")
        if n and (time_days.min() < 1):
            raise SchemaError("time_days must be >= 1")
        if not np.isin(event, (0, 1)).all():
            raise SchemaError("event must be 0/1")
        if censor_reason is None:
            censor_reason = np.where(event == 1, "none", "current_resident")
        censor_reason = np.asarray(censor_reason, dtype=object)
        bad = ~np.isin(censor_reason, CENSOR_REASONS)
        if bad.any():
            raise SchemaError(f"unknown censor_reason values: {set(censor_reason[bad])}")
        if np.any((event == 1) & (censor_reason != "none")):
            raise SchemaError("event=1 requires censor_reason='none'")

        if feature_meta is None:
            if p != len(FEATURES):
                raise SchemaError("feature_meta required for non-default column sets")
            feature_meta = [
                FeatureMeta(s.name, s.lo, s.hi, _missing_rate(values[:, j]))
                for j, s in enumerate(FEATURES)
            ]
        if len(feature_meta) != p:
            raise SchemaError("feature_meta does not match matrix width")
        for meta in feature_meta:
            if not 0.0 <= meta.missing_rate <= 1.0:
                raise SchemaError(f"missing rate out of [0,1] for {meta.name}")

        self._values = values
        self._values.setflags(write=False)
        self._time = time_days
        self._time.setflags(write=False)
        self._event = event
        self._event.setflags(write=False)
        self._censor_reason = censor_reason
        self._censor_reason.setflags(write=False)
        self.feature_meta = tuple(feature_meta)

    values = property(lambda self: self._values)
    time_days = property(lambda self: self._time)
    event = property(lambda self: self._event)
    censor_reason = property(lambda self: self._censor_reason)

    @property
    def feature_names(self):
        return [m.name for m in self.feature_meta]

    def __len__(self):
        return self._values.shape[0]

    @property
    def n_features(self):
        return self._values.shape[1]

    @property
    def event_fraction(self):
        return float(self._event.mean()) if len(self) else float("nan")

    @classmethod
    def from_records(cls, records, outcomes, feature_names=FEATURE_NAMES):
        if len(records) != len(outcomes):
            raise SchemaError("records and outcomes must align one-to-one")
        values = (
            np.vstack([r.as_row(feature_names) for r in records])
            if records
            else np.empty((0, len(feature_names)))
        )
        meta = [
            FeatureMeta(
                name,
                FEATURE_BY_NAME[name].lo,
                FEATURE_BY_NAME[name].hi,
                _missing_rate(values[:, j]) if len(records) else 0.0,
            )
            for j, name in enumerate(feature_names)
        ]
        return cls(
            values,
            np.array([o.time_days for o in outcomes], dtype=int),
            np.array([o.event for o in outcomes], dtype=int),
            np.array([o.censor_reason for o in outcomes], dtype=object),
            feature_meta=meta,
        )

    def record(self, i):
        row = self._values[i]
        return ResidentRecord(
            {
                name: row[j]
                for j, name in enumerate(self.feature_names)
                if np.isfinite(row[j])
            }
        )

    def outcome(self, i):
        return SurvivalOutcome(
            int(self._time[i]), int(self._event[i]), str(self._censor_reason[i])
        )

    def survival_y(self):
        from ..nonparametric import survival_target

        return survival_target(self._event.astype(bool), self._time.astype(float))

    def with_values(self, values, feature_meta=None, refresh_missing=True):
        """New cohort sharing outcomes; used by imputation and pruning."""
        meta = feature_meta if feature_meta is not None else self.feature_meta
        if refresh_missing:
            values = np.asarray(values, dtype=float)
            meta = [
                FeatureMeta(m.name, m.lo, m.hi, _missing_rate(values[:, j]))
                for j, m in enumerate(meta)
            ]
        return Cohort(
            values,
            self._time.copy(),
            self._event.copy(),
            self._censor_reason.copy(),
            feature_meta=meta,
        )

    def subset(self, index):
        index = np.asarray(index)
        return Cohort(
            self._values[index].copy(),
            self._time[index].copy(),
            self._event[index].copy(),
            self._censor_reason[index].copy(),
            feature_meta=self.feature_meta,
        )

    def select_features(self, names):
        keep = [self.feature_names.index(n) for n in names]
        meta = [self.feature_meta[j] for j in keep]
        return self.with_values(self._values[:, keep].copy(), feature_meta=meta,
                                refresh_missing=False)


def _missing_rate(column):
    return float(np.isnan(column).mean()) if column.size else 0.0
