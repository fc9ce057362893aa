"""Exception types shared across the package.

The harness maps these onto process exit codes, so each failure family gets
its own class rather than a bare ``ValueError``.
"""


class NoiccaError(Exception):
    """Base class for all package errors."""


class DimensionError(NoiccaError, ValueError):
    """Array shapes are inconsistent with the requested operation."""


class DataError(NoiccaError, ValueError):
    """Input data is unusable (too few samples, empty minibatch, ...)."""


class ConfigError(NoiccaError, ValueError):
    """Invalid configuration or hyperparameter."""


class NumericError(NoiccaError, ArithmeticError):
    """A numerical routine failed or met an indefinite/singular matrix."""


class UsageError(NoiccaError, RuntimeError):
    """API misuse, e.g. a backward pass with a stale forward cache."""


class FormatError(NoiccaError, ValueError):
    """A binary file does not follow the expected layout."""

    def __init__(self, message, offset=None):
        if offset is not None:
            message = f"{message} (at byte offset {offset})"
        super().__init__(message)
        self.offset = offset
