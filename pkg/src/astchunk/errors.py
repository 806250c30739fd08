"""Exception types shared across the package."""

from __future__ import annotations


class AstChunkError(Exception):
    """Base class for all errors raised by this package."""


class UnregisteredLanguage(AstChunkError):
    """Raised when no grammar or registry entry exists for a language name."""

    def __init__(self, name: str):
        super().__init__(f"no registered language named {name!r}")
        self.name = name


class SpanOutOfBounds(AstChunkError):
    """Raised when a byte span does not lie within a document."""

    def __init__(self, start: int, end: int, length: int):
        super().__init__(
            f"span [{start}, {end}) out of bounds for document of {length} bytes"
        )
        self.start = start
        self.end = end
        self.length = length


class MalformedRecord(AstChunkError):
    """Raised when a serialized record or query line cannot be decoded.

    ``line_number`` is 1-based, pointing at the offending line of the
    input file.
    """

    def __init__(self, line_number: int, reason: str):
        super().__init__(f"line {line_number}: {reason}")
        self.line_number = line_number
        self.reason = reason


class NativeBuildError(AstChunkError):
    """Raised when the bundled grammar library cannot be compiled or loaded."""
