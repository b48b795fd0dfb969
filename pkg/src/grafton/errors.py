"""Exception types shared across the package."""


class GraftonError(Exception):
    """Base class for all errors raised by this package."""


class DataFormatError(GraftonError):
    """Malformed dataset text; message carries the file and line number."""


class DimensionError(GraftonError):
    """Tensor shapes do not compose for the requested operation."""


class ContractError(GraftonError):
    """An API precondition was violated by the caller."""


class ConfigError(GraftonError):
    """A run configuration is invalid or inconsistent with the data."""


class CapacityError(GraftonError):
    """Input exceeds a configured size guard (e.g. dense attention cap)."""


class TrainingError(GraftonError):
    """Training diverged; message carries the epoch index."""


class CheckpointError(GraftonError):
    """Checkpoint file is unreadable or disagrees with the model config."""


class UsageError(GraftonError):
    """Bad command-line invocation; mapped to exit code 2."""
