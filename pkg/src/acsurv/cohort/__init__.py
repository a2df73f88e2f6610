from .schema import (
    CENSOR_REASONS,
    FEATURE_ALIASES,
    FEATURE_BY_NAME,
    FEATURE_NAMES,
    FEATURES,
    Cohort,
    FeatureMeta,
    FeatureSpec,
    ResidentRecord,
    SurvivalOutcome,
    canonical_feature,
    validate_value,
)
from .encoding import (
    TimedObservation,
    encode_answer,
    encode_discharge,
    encode_record,
    select_earliest_within_window,
)
from .io import CsvSchema, IngestReport, ingest_csv, write_cohort_csv
from .simulate import (
    DEFAULT_COEFFICIENTS,
    GroundTruth,
    SimConfig,
    simulate_cohort,
    table_missing_rates,
)

__all__ = [
    "CENSOR_REASONS",
    "FEATURE_ALIASES",
    "FEATURE_BY_NAME",
    "FEATURE_NAMES",
    "FEATURES",
    "Cohort",
    "FeatureMeta",
    "FeatureSpec",
    "ResidentRecord",
    "SurvivalOutcome",
    "canonical_feature",
    "validate_value",
    "TimedObservation",
    "encode_answer",
    "encode_discharge",
    "encode_record",
    "select_earliest_within_window",
    "CsvSchema",
    "IngestReport",
    "ingest_csv",
    "write_cohort_csv",
    "DEFAULT_COEFFICIENTS",
    "GroundTruth",
    "SimConfig",
    "simulate_cohort",
    "table_missing_rates",
]
