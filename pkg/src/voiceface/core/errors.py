"""
Error hierarchy for the voiceface engine.
Each error class carries the exit code the command line reports for it.
"""


class VoiceFaceError(Exception):
    """Base class for all engine errors."""

    exit_code = 1


class ConfigError(VoiceFaceError):
    """Usage or configuration problem."""

    exit_code = 1


class InvalidConfig(ConfigError):
    """Configuration values are missing, unknown or out of range."""


class InvalidArgs(ConfigError):
    """Command arguments are inconsistent."""


class DataError(VoiceFaceError):
    """Input data cannot support the requested operation."""

    exit_code = 2


class InsufficientData(DataError):
    """Not enough identities or samples."""


class ZeroVector(DataError):
    """A vector with (numerically) zero norm was normalized."""


class DimensionMismatch(DataError):
    """Vector or matrix dimensions do not line up."""


class NoRelevantItems(DataError):
    """A retrieval query has no relevant gallery item."""


class StreamTooShort(DataError):
    """Frame stream is shorter than the minimum window."""


class UnknownIdentity(DataError):
    """Identity label not present in the dataset."""


class MalformedFile(DataError):
    """File content does not follow the expected format."""


class ArtifactIOError(VoiceFaceError):
    """A file could not be read or written."""

    exit_code = 3
