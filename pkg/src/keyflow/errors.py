"""Exception types shared across the package."""


class KeyflowError(Exception):
    """Base class for all package errors."""


class InvalidArgumentError(KeyflowError):
    """Non-finite, mis-shaped, or otherwise unusable input."""


class UnknownTaskError(KeyflowError):
    pass


class UnknownObjectError(KeyflowError):
    pass


class InfeasibleTaskError(KeyflowError):
    """Scripted expert cannot reach success from the given placement."""


class EpisodeFormatError(KeyflowError):
    """Base for episode container failures."""


class VersionMismatchError(EpisodeFormatError):
    pass


class CorruptChunkError(EpisodeFormatError):
    pass


class MissingFieldError(EpisodeFormatError):
    pass


class NormalizationError(KeyflowError):
    """Degenerate statistics (e.g. a constant position dimension)."""


class EmptyCropError(KeyflowError):
    pass


class EmptyMaskError(KeyflowError):
    pass


class MaskServiceUnavailableError(KeyflowError):
    """External mask backend is a documented contract, not an implementation."""


class ShapeMismatchError(KeyflowError):
    pass


class CheckpointError(KeyflowError):
    """Checkpoint version or normalizer fingerprint mismatch."""


class DivergenceError(KeyflowError):
    """Non-finite loss or activation; carries the step/block index."""

    def __init__(self, message: str, index: int | None = None):
        super().__init__(message)
        self.index = index


class ConfigError(KeyflowError):
    """Run configuration failed schema validation."""
