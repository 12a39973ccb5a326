"""Exception hierarchy shared across the package."""


class HsiBandError(Exception):
    """Base class for every error raised by hsiband."""


class FormatError(HsiBandError, ValueError):
    """A file does not match its declared format.

    ``location`` holds a byte offset or a 1-based line number when one is known.
    """

    def __init__(self, message, path=None, location=None):
        self.path = path
        self.location = location
        prefix = f"{path}: " if path is not None else ""
        suffix = f" (at {location})" if location is not None else ""
        super().__init__(f"{prefix}{message}{suffix}")


class ValidationError(HsiBandError, ValueError):
    """An object or argument violates a documented invariant."""


class InconsistencyError(HsiBandError, ValueError):
    """Information quantities that cannot coexist (e.g. MI larger than H)."""


class ExternalClassifierError(HsiBandError, RuntimeError):
    """The external classifier broke the train/test file protocol."""


class EvaluationError(HsiBandError, RuntimeError):
    """Evaluating a threshold couple failed; ``thresholds`` names the couple."""

    def __init__(self, message, thresholds=None):
        self.thresholds = thresholds
        super().__init__(message)


class ConfigError(HsiBandError, ValueError):
    """A run configuration is invalid or references unusable paths."""
