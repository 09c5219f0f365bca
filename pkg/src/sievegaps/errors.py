"""Exception hierarchy shared across the package."""

from __future__ import annotations


class SieveGapsError(Exception):
    """Base class for every error raised by sievegaps."""


class DomainError(SieveGapsError, ValueError):
    """An argument lies outside the mathematical domain of the operation."""


class PreconditionError(SieveGapsError, ValueError):
    """An input violates an operation's stated precondition."""


class ResourceError(SieveGapsError):
    """A configured resource guard (resident gaps, stream length) was exceeded."""


class StreamError(SieveGapsError):
    """A gap stream ended early or its consumer failed."""


class TruncatedStreamError(StreamError):
    pass


class StreamAborted(StreamError):
    """The sink raised mid-stream; ``summary`` reports progress up to the failure."""

    def __init__(self, message: str, summary) -> None:
        super().__init__(message)
        self.summary = summary


class SnapshotError(SieveGapsError):
    code = "snapshot"


class BadMagicError(SnapshotError):
    code = "bad-magic"


class BadVersionError(SnapshotError):
    code = "bad-version"


class BadHeaderError(SnapshotError):
    code = "bad-header"


class ChecksumError(SnapshotError):
    code = "checksum"


class PhiMismatchError(SnapshotError):
    code = "phi-mismatch"
