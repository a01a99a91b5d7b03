"""Exception types shared across the package."""


class DeviceSearchError(Exception):
    """Base class for all package errors."""


class IngestError(DeviceSearchError):
    """A corpus input file is missing or unreadable."""


class ValidationError(DeviceSearchError):
    """A record violates the corpus data model."""


class ProviderError(DeviceSearchError):
    """Transport-level failure talking to a completion/embedding provider.

    Retryable: callers apply their retry policy before giving up.
    """


class ExtractionError(DeviceSearchError):
    """Feature extraction failed after retries.

    Carries the last raw provider response for audit.
    """

    def __init__(self, message: str, raw_response: str = ""):
        super().__init__(message)
        self.raw_response = raw_response


class FeatureParseError(DeviceSearchError):
    """A provider response did not contain the expected sections."""

    def __init__(self, message: str, missing_section: str = ""):
        super().__init__(message)
        self.missing_section = missing_section


class GenerationError(DeviceSearchError):
    """Simulated-query generation produced no usable output."""


class IndexBuildError(DeviceSearchError):
    """Features or embeddings do not cover the corpus."""


class UnknownDeviceError(DeviceSearchError):
    """A device id is not present in the index."""


class EvaluationError(DeviceSearchError):
    """An evaluation case references devices missing from the ranking."""


class ConfigurationError(DeviceSearchError):
    """Invalid tuning or evaluation configuration."""
