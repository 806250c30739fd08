"""Source documents and the non-whitespace size metric.

A :class:`SourceDocument` holds a file's raw bytes immutably for its
lifetime; every span in the toolkit indexes into those bytes.  The size
metric counts bytes outside {space, tab, CR, LF, FF, VT}.  It is byte-based
rather than codepoint-based: for ASCII-dominant source the two coincide, and
multi-byte codepoints simply count once per byte.  A cached prefix-sum makes
any span query O(1), which matters because chunking sizes every node it
visits.
"""

from __future__ import annotations

import os
from bisect import bisect_right
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import SpanOutOfBounds, UnregisteredLanguage
from .languages import LanguageId, detect_language, get_language

#: Byte values the size metric ignores.
WHITESPACE_BYTES = frozenset(b" \t\r\n\f\v")

_WS_ARRAY = np.frombuffer(bytes(sorted(WHITESPACE_BYTES)), dtype=np.uint8)


@dataclass(frozen=True)
class SourceDocument:
    """One parsed-about-to-be-chunked file: path, bytes, language, lines."""

    path: str
    data: bytes
    language: LanguageId
    _np_bytes: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        arr = np.frombuffer(self.data, dtype=np.uint8)
        object.__setattr__(self, "_np_bytes", arr)

    @classmethod
    def from_path(
        cls,
        path: str | os.PathLike[str],
        language: LanguageId | str | None = None,
        relative_to: str | os.PathLike[str] | None = None,
    ) -> "SourceDocument":
        """Read a file from disk; language defaults to extension detection."""
        fspath = os.fspath(path)
        if isinstance(language, str):
            language = get_language(language)
        if language is None:
            language = detect_language(fspath)
            if language is None:
                raise UnregisteredLanguage(os.path.splitext(fspath)[1] or fspath)
        with open(fspath, "rb") as fh:
            data = fh.read()
        rel = os.path.relpath(fspath, relative_to) if relative_to else fspath
        return cls(path=rel.replace(os.sep, "/"), data=data, language=language)

    @classmethod
    def from_text(
        cls, text: str | bytes, language: LanguageId | str, path: str = "<memory>"
    ) -> "SourceDocument":
        """Wrap an in-memory snippet as a document; accepts language names."""
        if isinstance(language, str):
            language = get_language(language)
        data = text.encode("utf-8") if isinstance(text, str) else bytes(text)
        return cls(path=path, data=data, language=language)

    def __len__(self) -> int:
        return len(self.data)

    @cached_property
    def line_offsets(self) -> tuple[int, ...]:
        """Byte offset of each line start: ``[0]`` plus one past every LF.

        A file ending in a newline yields a final offset equal to the byte
        length (the start of a phantom empty last line); ``line_count``
        excludes it.  Offsets are strictly increasing and begin at 0.
        """
        after_newlines = (np.flatnonzero(self._np_bytes == 0x0A) + 1).tolist()
        return tuple([0] + after_newlines)

    @property
    def line_count(self) -> int:
        """Number of lines; a trailing newline does not open a new line."""
        if not self.data:
            return 0
        offsets = self.line_offsets
        if offsets[-1] >= len(self.data):
            return len(offsets) - 1
        return len(offsets)

    def line_index_of(self, byte_offset: int) -> int:
        """0-based index of the line containing ``byte_offset``."""
        if not 0 <= byte_offset <= len(self.data):
            raise SpanOutOfBounds(byte_offset, byte_offset, len(self.data))
        return bisect_right(self.line_offsets, byte_offset) - 1

    def line_span_of(self, start: int, end: int) -> tuple[int, int]:
        """1-based inclusive (first, last) line numbers of byte span [start, end)."""
        self._check_span(start, end)
        first = self.line_index_of(start) + 1
        last = self.line_index_of(max(start, end - 1)) + 1
        return first, last

    @cached_property
    def _nonws_prefix(self) -> np.ndarray:
        """``prefix[i]`` = count of non-whitespace bytes in ``data[:i]``."""
        prefix = np.zeros(len(self.data) + 1, dtype=np.int64)
        if self.data:
            nonws = ~np.isin(self._np_bytes, _WS_ARRAY)
            np.cumsum(nonws, out=prefix[1:])
        return prefix

    def _check_span(self, start: int, end: int) -> None:
        if not (0 <= start <= end <= len(self.data)):
            raise SpanOutOfBounds(start, end, len(self.data))

    def non_ws_size(self, start: int = 0, end: int | None = None) -> int:
        """Count of non-whitespace bytes in ``data[start:end]``."""
        if end is None:
            end = len(self.data)
        self._check_span(start, end)
        prefix = self._nonws_prefix
        return int(prefix[end]) - int(prefix[start])

    def slice(self, start: int, end: int) -> bytes:
        """Raw bytes of span [start, end), bounds-checked."""
        self._check_span(start, end)
        return self.data[start:end]


def non_ws_size(doc: SourceDocument, span: tuple[int, int]) -> int:
    """Free-function form of :meth:`SourceDocument.non_ws_size`."""
    return doc.non_ws_size(span[0], span[1])
