"""Right-continuous step functions on a finite knot grid.

Survival curves and cumulative hazards are both represented this way:
the function takes ``baseline`` before the first knot and ``y[i]`` on
``[x[i], x[i+1])``, extending the last value to infinity.
"""

import numpy as np


class StepFunction:
    """Piecewise-constant, right-continuous function.

    Parameters
    ----------
    x : array-like
        Knot locations, strictly increasing.
    y : array-like
        Value taken on ``[x[i], x[i+1])``; same length as ``x``.
    baseline : float
        Value on ``(-inf, x[0])``.
    """

    __slots__ = ("x", "y", "baseline")

    def __init__(self, x, y, baseline):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if x.ndim != 1 or y.ndim != 1 or x.shape != y.shape:
            raise ValueError("x and y must be 1-d arrays of equal length")
        if x.size and np.any(np.diff(x) <= 0):
            raise ValueError("knots must be strictly increasing")
        self.x = x
        self.y = y
        self.baseline = float(baseline)

    def __call__(self, t):
        """Evaluate at ``t`` (scalar or array), right-continuously."""
        t = np.asarray(t, dtype=float)
        idx = np.searchsorted(self.x, t, side="right")
        vals = np.concatenate(([self.baseline], self.y))[idx]
        return vals if t.ndim else float(vals)

    def left_limit(self, t):
        """Evaluate the limit from the left, f(t-)."""
        t = np.asarray(t, dtype=float)
        idx = np.searchsorted(self.x, t, side="left")
        vals = np.concatenate(([self.baseline], self.y))[idx]
        return vals if t.ndim else float(vals)

    def is_monotone(self, direction):
        """True when values (including the baseline) never move against ``direction``.

        direction is "increasing" or "decreasing", both non-strict.
        """
        seq = np.concatenate(([self.baseline], self.y))
        d = np.diff(seq)
        if direction == "increasing":
            return bool(np.all(d >= 0))
        if direction == "decreasing":
            return bool(np.all(d <= 0))
        raise ValueError(f"unknown direction {direction!r}")

    def __eq__(self, other):
        if not isinstance(other, StepFunction):
            return NotImplemented
        return (
            self.baseline == other.baseline
            and np.array_equal(self.x, other.x)
            and np.array_equal(self.y, other.y)
        )

    def __repr__(self):
        return f"StepFunction({self.x.size} knots, baseline={self.baseline:g})"


def validate_survival_curve(fn):
    """Check that ``fn`` is a plausible survival function S(t).

    Values must lie in [0, 1] and never increase.  Raises ValueError.
    """
    vals = np.concatenate(([fn.baseline], fn.y))
    if np.any(vals < -1e-12) or np.any(vals > 1 + 1e-12):
        raise ValueError("survival values outside [0, 1]")
    if not fn.is_monotone("decreasing"):
        raise ValueError("survival curve must be non-increasing")


def validate_cumulative_hazard(fn):
    """Check that ``fn`` is a plausible cumulative hazard: >= 0, non-decreasing."""
    vals = np.concatenate(([fn.baseline], fn.y))
    if np.any(vals < -1e-12):
        raise ValueError("cumulative hazard must be non-negative")
    if not fn.is_monotone("increasing"):
        raise ValueError("cumulative hazard must be non-decreasing")
