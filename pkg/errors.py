"""Exception hierarchy shared by every module, with CLI exit codes."""
from typing import Optional


class CentroidEncoderError(Exception):
    """Base class for all domain errors."""

    exit_code = 1


class ContractViolation(CentroidEncoderError, ValueError):
    """A precondition of an operation was not met (shape, range, symmetry)."""

    exit_code = 2


class ConfigError(CentroidEncoderError):
    """An experiment configuration value is missing or invalid."""

    exit_code = 1

    def __init__(self, message: str, field: Optional[str] = None):
        """Initialize the error.

        Args:
            message: Human-readable description
            field: Name of the offending config key, if any
        """
        self.field = field
        if field and field not in message:
            message = f"{field}: {message}"
        super().__init__(message)


class DataError(CentroidEncoderError):
    """Input data could not be read or does not fit the model."""

    exit_code = 2


class IdxParseError(DataError):
    """Malformed IDX file: bad magic number, truncated payload or count mismatch."""


class CsvParseError(DataError):
    """Malformed CSV table: ragged row or non-numeric feature cell."""


class NumericError(CentroidEncoderError):
    """Non-finite values or degenerate activations during a computation."""

    exit_code = 3
