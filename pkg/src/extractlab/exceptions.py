"""Exception types shared across the package."""


class ExtractLabError(Exception):
    """Base class for every error raised by this package."""


class InvalidInputError(ExtractLabError, ValueError):
    """An argument failed validation (empty, non-finite, wrong shape, ...)."""


class DimensionMismatchError(InvalidInputError):
    """Operand dimensions are inconsistent with each other."""


class InvalidDistributionError(InvalidInputError):
    """A vector is not a valid probability distribution."""


class DegenerateDisplacementError(InvalidInputError):
    """Cosine similarity requested for a vector with near-zero norm."""


class NumericalError(ExtractLabError, RuntimeError):
    """A numerical routine cannot proceed (non-positive-definite pivot, ...)."""

    def __init__(self, message, pivot_index=None):
        super().__init__(message)
        self.pivot_index = pivot_index


class TrainingDivergedError(ExtractLabError, RuntimeError):
    """Training produced a non-finite loss."""

    def __init__(self, message, epoch=None):
        super().__init__(message)
        self.epoch = epoch


class ArchitectureError(ExtractLabError, ValueError):
    """The model architecture does not support the requested operation."""


class BudgetExceededError(ExtractLabError, RuntimeError):
    """An oracle query would exceed the session's query budget."""


class GenerationError(ExtractLabError, RuntimeError):
    """Synthetic data generation failed after bounded retries."""


class ConfigError(ExtractLabError, ValueError):
    """A configuration value is missing, unknown, or out of range.

    ``field`` carries the dotted key path when one is known.
    """

    def __init__(self, message, field=None):
        if field is not None:
            message = f"{field}: {message}"
        super().__init__(message)
        self.field = field


class ModelFormatError(ExtractLabError, ValueError):
    """A serialized model file is malformed or has the wrong version."""


class ChecksumError(ModelFormatError):
    """A serialized model file failed its payload checksum."""
