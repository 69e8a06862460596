"""Exception hierarchy.

Everything user-facing derives from :class:`TailgaugeError`, which the CLI
maps to exit code 1. Anything else escaping a command is treated as an
internal invariant violation (exit code 2).
"""

from __future__ import annotations


class TailgaugeError(Exception):
    """Base class for all domain and configuration errors."""


class ConfigurationError(TailgaugeError):
    """Invalid experiment or CLI configuration."""


class DomainError(TailgaugeError):
    """Argument outside the mathematical domain of an operation."""


class InvalidDGPError(TailgaugeError):
    """Data-generating process violates its constraints (e.g. alpha <= 0)."""


class InsufficientTailError(TailgaugeError):
    """Too few observations above the resolved threshold."""


class RankDeficiencyError(TailgaugeError):
    """Retained-sample Gram matrix is numerically singular.

    Carries the ascending eigenvalue list so callers can report how
    degenerate the tail design was.
    """

    def __init__(self, message: str, eigenvalues=None):
        super().__init__(message)
        self.eigenvalues = eigenvalues


class ConvergenceError(TailgaugeError):
    """Newton solver failed to converge; carries the solver trace."""

    def __init__(self, message: str, trace=None):
        super().__init__(message)
        self.trace = trace


class EvaluationOverflowError(TailgaugeError):
    """exp() argument exceeded the overflow guard; carries the row index."""

    def __init__(self, message: str, row: int | None = None):
        super().__init__(message)
        self.row = row


class IngestionError(TailgaugeError):
    """Malformed input file (bad dates, non-positive prices, ...)."""


class ExperimentError(TailgaugeError):
    """A Monte Carlo experiment produced an unusable result set."""
