"""Survival modelling and decision support for aged-care admission cohorts."""

__version__ = "0.1.0"

from .stepfun import StepFunction
from .nonparametric import (
    breslow_baseline,
    censoring_km,
    kaplan_meier,
    nelson_aalen,
    survival_target,
)
from .cox import CoxPH, PenalizedCox
from .ensemble import GradientBoostedCox, RandomSurvivalForest
from .calibration import PlattScaler, fit_platt
from .impute import MiceImputer
from .experiments import ExperimentConfig, run_experiments
from .errors import (
    AcsurvError,
    BundleIntegrityError,
    ConvergenceError,
    SchemaError,
    UndefinedMetricError,
)

__all__ = [
    "StepFunction",
    "breslow_baseline",
    "censoring_km",
    "kaplan_meier",
    "nelson_aalen",
    "survival_target",
    "CoxPH",
    "PenalizedCox",
    "GradientBoostedCox",
    "RandomSurvivalForest",
    "PlattScaler",
    "fit_platt",
    "MiceImputer",
    "ExperimentConfig",
    "run_experiments",
    "AcsurvError",
    "BundleIntegrityError",
    "ConvergenceError",
    "SchemaError",
    "UndefinedMetricError",
    "__version__",
]
