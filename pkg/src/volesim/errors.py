"""Exception types shared across the package."""

from __future__ import annotations

__all__ = [
    "VolesimError",
    "UnsupportedParameterError",
    "NoEquilibriumError",
    "NumericError",
    "InsufficientScaleError",
]


class VolesimError(Exception):
    """Base class for package-specific failures."""


class UnsupportedParameterError(VolesimError, ValueError):
    """A parameter combination outside the supported regime.

    Raised for example when the smooth fecundity construction is requested
    with gamma <= 2, where its inner junction density becomes nonpositive.
    Callers may catch this and fall back to the piecewise-constant curve.
    """


class NoEquilibriumError(VolesimError, ValueError):
    """The non-seasonal model has no positive equilibrium for these parameters."""


class NumericError(VolesimError, RuntimeError):
    """A numeric procedure failed (overflow, non-convergence, bracketing failure).

    Attributes:
        step_index: absolute simulation step at failure, when applicable.
    """

    def __init__(self, message: str, step_index: int | None = None):
        super().__init__(message)
        self.step_index = step_index


class InsufficientScaleError(NumericError):
    """A scaling-range fit has too few valid grid points to be meaningful."""
