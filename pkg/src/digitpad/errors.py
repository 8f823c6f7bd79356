"""Exception types shared across the package."""


class DigitpadError(Exception):
    """Base class for all errors raised by this package."""


class DataQualityError(DigitpadError):
    """Input frame or file contains non-finite or otherwise unusable values."""


class InvalidSequenceError(DigitpadError):
    """A touch sequence violates a structural precondition (e.g. too short)."""


class EmptyTouchError(DigitpadError):
    """A sequence contains no frame above the touch thresholds."""


class DatasetError(DigitpadError):
    """Dataset loading, splitting or export failed."""


class NumericalFailureError(DigitpadError):
    """Non-finite activations encountered during a network evaluation."""

    def __init__(self, message, timestep=None):
        super().__init__(message)
        self.timestep = timestep


class ModelFormatError(DigitpadError):
    """Model file is corrupted, truncated or has an unsupported version."""


class ConfigError(DigitpadError):
    """Global configuration file is invalid."""
