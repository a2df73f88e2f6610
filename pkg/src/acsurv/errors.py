"""Exception types shared across the package."""


class AcsurvError(Exception):
    """Base class for errors raised by this package."""


class SchemaError(AcsurvError, ValueError):
    """A record, answer or file does not conform to the feature schema."""


class SimulationError(AcsurvError, RuntimeError):
    """The simulator could not satisfy its configuration."""


class ConvergenceError(AcsurvError, RuntimeError):
    """An iterative fit failed to converge.

    Carries the last iterate and a diagnostic message so callers can
    inspect how far the optimiser got.
    """

    def __init__(self, message, last_coef=None, n_iter=None):
        super().__init__(message)
        self.last_coef = last_coef
        self.n_iter = n_iter


class UndefinedMetricError(AcsurvError, ValueError):
    """A metric has no defined value on the given data (refuse, never guess)."""


class BundleIntegrityError(AcsurvError, ValueError):
    """A serialized model bundle is corrupt, truncated or version-incompatible."""
