"""Concrete-syntax-tree parsing on top of the bundled grammar runtime.

Parsing never rejects input: grammar-backed parsers always produce a tree,
representing malformed regions as error-recovery nodes.  The whole tree is
flattened in a single native call into pre-order arrays, and
:class:`SyntaxNodeView` is a lazy flyweight over those arrays — creating a
view is O(1) and no per-node FFI round trips happen after the flatten.
"""

from __future__ import annotations

import ctypes
import functools
import threading
from typing import Iterator

import numpy as np

from ._native import FLAG_ERROR, FLAG_HAS_ERROR, FLAG_MISSING, FLAG_NAMED, FlatNode, load
from .document import SourceDocument
from .errors import UnregisteredLanguage
from .languages import LanguageId, language_info


@functools.lru_cache(maxsize=None)
def _grammar_handle(grammar_symbol: str) -> int:
    lib = load()
    handle = lib.azg_language(grammar_symbol.encode("ascii"))
    if not handle:
        raise UnregisteredLanguage(grammar_symbol)
    return handle


@functools.lru_cache(maxsize=None)
def _symbol_names(grammar_symbol: str) -> tuple[str, ...]:
    lib = load()
    handle = _grammar_handle(grammar_symbol)
    count = lib.azg_symbol_count(handle)
    return tuple(
        lib.azg_symbol_name(handle, i).decode("utf-8") for i in range(count)
    )


class ParsedTree:
    """Immutable flat form of one parse: pre-order node arrays plus source.

    Node ``i``'s subtree occupies flat indices ``[i, subtree_end[i])``; its
    children are ``i + 1`` and then successive ``subtree_end`` hops.  The
    root's span is normalized to cover the whole file — tree-sitter starts
    the root after a UTF-8 BOM, but every consumer here wants total byte
    coverage.
    """

    __slots__ = (
        "source",
        "language",
        "starts",
        "ends",
        "subtree_ends",
        "name_children",
        "kind_ids",
        "flags",
        "kind_names",
    )

    def __init__(self, source: SourceDocument, raw: ctypes.Array, count: int):
        self.source = source
        self.language = source.language
        view = np.ctypeslib.as_array(raw)
        self.starts = view["start_byte"].astype(np.int64)
        self.ends = view["end_byte"].astype(np.int64)
        self.subtree_ends = view["subtree_end"].astype(np.int64)
        self.name_children = view["name_child"].astype(np.int64)
        self.flags = view["flags"].copy()
        if count:
            self.starts[0] = 0
            self.ends[0] = len(source.data)
        symbols = _symbol_names(language_info(source.language).grammar_symbol)
        # Error-recovery nodes carry the grammar-independent builtin symbol
        # 0xFFFF; remap it onto an appended sentinel so kind lookups stay
        # plain table indexing.
        error_slot = len(symbols)
        kind_ids = view["kind_id"].astype(np.int64)
        kind_ids[kind_ids >= error_slot] = error_slot
        self.kind_ids = kind_ids
        self.kind_names = (*symbols, "ERROR")

    def __len__(self) -> int:
        return len(self.starts)

    @property
    def root(self) -> "SyntaxNodeView":
        return SyntaxNodeView(self, 0)

    def node(self, index: int) -> "SyntaxNodeView":
        return SyntaxNodeView(self, index)

    def child_indices(self, index: int) -> Iterator[int]:
        """Flat indices of ``index``'s direct children, left to right."""
        end = int(self.subtree_ends[index])
        child = index + 1
        while child < end:
            yield child
            child = int(self.subtree_ends[child])


class SyntaxNodeView:
    """Read-only view of one node: kind, half-open byte span, children.

    ``is_error`` covers both kinds of error-recovery artifacts the parser
    can produce: ERROR nodes (unparseable input) and MISSING nodes
    (zero-width tokens inserted to complete a production).
    """

    __slots__ = ("tree", "index")

    def __init__(self, tree: ParsedTree, index: int):
        self.tree = tree
        self.index = index

    @property
    def kind(self) -> str:
        return self.tree.kind_names[int(self.tree.kind_ids[self.index])]

    @property
    def start_byte(self) -> int:
        return int(self.tree.starts[self.index])

    @property
    def end_byte(self) -> int:
        return int(self.tree.ends[self.index])

    @property
    def span(self) -> tuple[int, int]:
        return (self.start_byte, self.end_byte)

    @property
    def is_named(self) -> bool:
        return bool(int(self.tree.flags[self.index]) & FLAG_NAMED)

    @property
    def is_error(self) -> bool:
        flags = int(self.tree.flags[self.index])
        return bool(flags & (FLAG_ERROR | FLAG_MISSING))

    @property
    def has_error(self) -> bool:
        """True when any error-recovery node lies in this subtree."""
        flags = int(self.tree.flags[self.index])
        return bool(flags & (FLAG_ERROR | FLAG_MISSING | FLAG_HAS_ERROR))

    @property
    def children(self) -> list["SyntaxNodeView"]:
        tree = self.tree
        return [SyntaxNodeView(tree, i) for i in tree.child_indices(self.index)]

    @property
    def child_count(self) -> int:
        return sum(1 for _ in self.tree.child_indices(self.index))

    @property
    def is_leaf(self) -> bool:
        return int(self.tree.subtree_ends[self.index]) == self.index + 1

    @property
    def name_child(self) -> "SyntaxNodeView | None":
        """The child filling the grammar's ``name`` field, if any."""
        idx = int(self.tree.name_children[self.index])
        return SyntaxNodeView(self.tree, idx) if idx >= 0 else None

    @property
    def text(self) -> bytes:
        return self.tree.source.data[self.start_byte : self.end_byte]

    def size(self) -> int:
        """Non-whitespace byte count of this node's span."""
        return self.tree.source.non_ws_size(self.start_byte, self.end_byte)

    def walk(self) -> Iterator["SyntaxNodeView"]:
        """This node and all descendants, pre-order."""
        tree = self.tree
        for i in range(self.index, int(tree.subtree_ends[self.index])):
            yield SyntaxNodeView(tree, i)

    def __repr__(self) -> str:  # pragma: no cover - debugging aid
        return f"<{self.kind} [{self.start_byte}, {self.end_byte})>"

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, SyntaxNodeView)
            and other.tree is self.tree
            and other.index == self.index
        )

    def __hash__(self) -> int:
        return hash((id(self.tree), self.index))


class Parser:
    """Factory-produced parser; one instance per worker, not shareable.

    The underlying native parser is stateful during a parse, so instances
    must not be used from two threads at once.  Construct one per worker
    (they are cheap) or use the module-level :func:`parse` convenience,
    which keeps one parser per (thread, language).
    """

    def __init__(self, language: LanguageId):
        self._lib = load()
        self.language = language
        info = language_info(language)
        self._handle = self._lib.azg_parser_new(_grammar_handle(info.grammar_symbol))
        if not self._handle:
            raise UnregisteredLanguage(language.name)

    def __del__(self):  # pragma: no cover - interpreter-dependent
        handle = getattr(self, "_handle", None)
        if handle:
            self._lib.azg_parser_delete(handle)
            self._handle = None

    def parse(self, doc: SourceDocument) -> SyntaxNodeView:
        """Parse a document and return the root node view.

        The root's span always covers ``[0, len(doc.data))``.  Parsing is
        deterministic: identical bytes and language yield structurally
        identical trees.
        """
        if doc.language != self.language:
            raise ValueError(
                f"document language {doc.language.name!r} does not match "
                f"parser language {self.language.name!r}"
            )
        lib = self._lib
        tree_ptr = lib.azg_parse(self._handle, doc.data, len(doc.data))
        if not tree_ptr:
            raise RuntimeError(f"parser returned no tree for {doc.path!r}")
        try:
            count = lib.azg_node_count(tree_ptr)
            buf = (FlatNode * max(count, 1))()
            written = lib.azg_flatten(tree_ptr, buf, count)
            if written != count:
                raise RuntimeError(
                    f"flattened {written} nodes, expected {count}"
                )
        finally:
            lib.azg_tree_delete(tree_ptr)
        return ParsedTree(doc, buf, count).root


_thread_local = threading.local()


def parse(doc: SourceDocument) -> SyntaxNodeView:
    """Parse with a per-thread cached parser for the document's language."""
    cache: dict[str, Parser] | None = getattr(_thread_local, "parsers", None)
    if cache is None:
        cache = _thread_local.parsers = {}
    parser = cache.get(doc.language.name)
    if parser is None:
        parser = cache[doc.language.name] = Parser(doc.language)
    return parser.parse(doc)
