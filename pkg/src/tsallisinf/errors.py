"""Exception types shared across the package."""

from __future__ import annotations


class SolverError(RuntimeError):
    """Raised when an iterative root solve fails to converge.

    Carries the last residual and, when applicable, the round at which
    the solve was attempted so callers can report where a run died.
    """

    def __init__(self, message: str, residual: float, round_index: int = -1):
        super().__init__(message)
        self.residual = float(residual)
        self.round_index = int(round_index)


class ConfigError(ValueError):
    """Raised for malformed or inconsistent experiment configuration."""


class UnsupportedRegimeError(ValueError):
    """Raised when a quantity is undefined for the requested loss regime."""
