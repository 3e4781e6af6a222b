"""Shared exception types.

Exit-code mapping for the CLI: ConfigError -> 2 (usage/config), everything
else -> 1 (runtime failure).
"""


class MaxDiffError(Exception):
    """Base class for library errors."""


class ConfigError(MaxDiffError):
    """Bad configuration: dimension mismatch, unknown key, invalid value."""


class InsufficientDataError(MaxDiffError):
    """Not enough samples for the requested operation."""


class NumericalError(MaxDiffError):
    """Non-finite state, singular matrix, or other numeric breakdown."""


class DegenerateFitError(MaxDiffError):
    """A fit cannot be performed (e.g. log of an identically-zero curve)."""


class NonConvergenceError(MaxDiffError):
    """Iteration failed to converge; carries the final residual."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual
