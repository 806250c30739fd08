"""Syntax-guided split-then-merge chunking and the fixed-line baseline.

The core algorithm walks a file's concrete syntax tree once, left to right:

* siblings are greedily packed into a running group while the group's
  non-whitespace size stays within ``max_chunk_size``;
* a node that alone exceeds the budget flushes the running group, is
  replaced by the result of chunking its own children, and packing resumes
  with a fresh empty group (sub-results never merge across levels);
* a childless node over the budget is handled by ``oversize_policy``:
  ``"line-split"`` cuts it into line-aligned pieces within budget, while
  ``"emit-oversized"`` passes it through as a single over-budget chunk.

Groups are then materialized into chunks whose spans tile the whole file:
each inter-node gap attaches to the chunk of the *following* node and
trailing bytes attach to the last chunk, so concatenating chunk texts in
order reproduces the file byte-for-byte.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np

from .document import SourceDocument
from .languages import LanguageId, get_language, language_info
from .parsing import ParsedTree, SyntaxNodeView, parse

Span = tuple[int, int]

OVERSIZE_LINE_SPLIT = "line-split"
OVERSIZE_EMIT = "emit-oversized"
OVERSIZE_POLICIES = (OVERSIZE_LINE_SPLIT, OVERSIZE_EMIT)

DEFAULT_MAX_CHUNK_SIZE = 2000


@dataclass(frozen=True)
class ChunkingConfig:
    """Knobs of the splitter.

    ``max_chunk_size`` is a non-whitespace-byte budget.  ``merge_enabled``
    off is the split-only mode: every node (or recursive sub-result) becomes
    its own group, which produces many more, smaller chunks.
    ``language_kind_map`` optionally overrides, per language name, the
    ``(class_like_kinds, function_like_kinds)`` sets used for breadcrumbs.
    """

    max_chunk_size: int = DEFAULT_MAX_CHUNK_SIZE
    merge_enabled: bool = True
    oversize_policy: str = OVERSIZE_LINE_SPLIT
    language_kind_map: Mapping[str, tuple[frozenset[str], frozenset[str]]] | None = None

    def __post_init__(self) -> None:
        if self.max_chunk_size < 1:
            raise ValueError(f"max_chunk_size must be >= 1, got {self.max_chunk_size}")
        if self.oversize_policy not in OVERSIZE_POLICIES:
            raise ValueError(
                f"oversize_policy must be one of {OVERSIZE_POLICIES}, "
                f"got {self.oversize_policy!r}"
            )
        if self.language_kind_map is not None:
            frozen = {
                name: (frozenset(classes), frozenset(functions))
                for name, (classes, functions) in self.language_kind_map.items()
            }
            object.__setattr__(self, "language_kind_map", frozen)


@dataclass(frozen=True)
class Breadcrumb:
    """Enclosure path of a chunk: file, then class and function names."""

    file_path: str
    class_path: tuple[str, ...] = ()
    function_path: tuple[str, ...] = ()


@dataclass(frozen=True)
class Chunk:
    """A contiguous byte span of one file, emitted as a retrievable unit.

    ``node_spans`` are the byte ranges of the syntax nodes the chunk was
    packed from (empty for the fixed-line baseline).  ``span`` additionally
    covers the gap bytes attached in front plus, for the last chunk of a
    file, any trailing bytes.  Within one file, chunk spans are sorted,
    non-overlapping, and tile ``[0, file length)`` exactly.
    """

    doc_path: str
    span: Span
    node_spans: tuple[Span, ...]
    size: int
    line_span: tuple[int, int]
    breadcrumb: Breadcrumb
    index: int


def _kind_sets(
    config: ChunkingConfig, language: LanguageId
) -> tuple[frozenset[str], frozenset[str]]:
    if config.language_kind_map:
        entry = config.language_kind_map.get(language.name)
        if entry is not None:
            return entry
    info = language_info(language)
    return info.class_kinds, info.function_kinds


# ---------------------------------------------------------------------------
# Packing


def _pack_indices(
    tree: ParsedTree, top: Iterable[int], config: ChunkingConfig
) -> list[tuple[list[int], bool]]:
    """Group flat node indices per the split-then-merge rules.

    Returns ``(indices, is_oversized_leaf)`` pairs.  Uses an explicit
    iterator stack instead of recursion so pathologically deep trees cannot
    exhaust the interpreter stack; popping a level flushes the running
    group, which is exactly the flush a recursive formulation performs when
    a sub-call returns.
    """
    budget = config.max_chunk_size
    merge = config.merge_enabled
    prefix = tree.source._nonws_prefix
    starts, ends, subtree_ends = tree.starts, tree.ends, tree.subtree_ends

    groups: list[tuple[list[int], bool]] = []
    current: list[int] = []
    current_size = 0

    def flush() -> None:
        nonlocal current, current_size
        if current:
            groups.append((current, False))
            current = []
            current_size = 0

    stack: list[Iterator[int]] = [iter(top)]
    while stack:
        index = next(stack[-1], None)
        if index is None:
            stack.pop()
            flush()
            continue
        size = int(prefix[int(ends[index])]) - int(prefix[int(starts[index])])
        if size > budget:
            flush()
            if int(subtree_ends[index]) > index + 1:
                stack.append(tree.child_indices(index))
            else:
                groups.append(([index], True))
        elif not merge:
            groups.append(([index], False))
        elif current_size + size <= budget:
            current.append(index)
            current_size += size
        else:
            # The running group is full: flush it and start the new group
            # with this node, so no node is ever dropped.
            flush()
            current = [index]
            current_size = size
    return groups


def chunk_nodes(
    nodes: Sequence[SyntaxNodeView], config: ChunkingConfig | None = None
) -> list[list[SyntaxNodeView]]:
    """Group sibling nodes (document order) per the split-then-merge rules.

    A childless node over the budget comes back as a singleton group under
    either oversize policy; the line-level split of such a leaf happens when
    chunks are materialized, not here, because its pieces are byte ranges
    rather than nodes.
    """
    config = config or ChunkingConfig()
    if not nodes:
        return []
    tree = nodes[0].tree
    raw = _pack_indices(tree, (view.index for view in nodes), config)
    return [[SyntaxNodeView(tree, i) for i in indices] for indices, _ in raw]


# ---------------------------------------------------------------------------
# Oversized leaves


def split_oversized_leaf(
    doc: SourceDocument, span: Span, budget: int
) -> list[Span]:
    """Cut one over-budget byte range into line-aligned pieces within budget.

    Whole lines are packed greedily; a single line that alone exceeds the
    budget is split at the largest prefix whose non-whitespace count equals
    the budget (the prefix extends through any whitespace that follows the
    final counted byte), and its remainder stays open for further packing.
    The pieces tile ``span`` exactly and each has non-whitespace size
    <= ``budget``.
    """
    if budget < 1:
        raise ValueError(f"budget must be >= 1, got {budget}")
    start, end = span
    if doc.non_ws_size(start, end) <= budget:
        return [(start, end)]
    prefix = doc._nonws_prefix

    # Line boundaries strictly inside the span, plus the span edges.
    offsets = doc.line_offsets
    inner = [o for o in offsets if start < o < end]
    boundaries = [start, *inner, end]

    pieces: list[Span] = []
    piece_start = start
    acc = 0
    for line_start, line_end in zip(boundaries, boundaries[1:]):
        line_size = doc.non_ws_size(line_start, line_end)
        if line_size > budget:
            if acc > 0:
                pieces.append((piece_start, line_start))
                pos = line_start
            else:
                # Open piece holds only whitespace (if anything): let the
                # first cut absorb it instead of emitting an empty-sized piece.
                pos = piece_start
            remaining = line_size
            while remaining > budget:
                target = int(prefix[pos]) + budget
                cut = int(np.searchsorted(prefix, target, side="right")) - 1
                pieces.append((pos, cut))
                remaining -= budget
                pos = cut
            piece_start = pos
            acc = remaining
        elif acc + line_size <= budget:
            acc += line_size
        else:
            pieces.append((piece_start, line_start))
            piece_start = line_start
            acc = line_size
    if piece_start < end:
        pieces.append((piece_start, end))
    return pieces


# ---------------------------------------------------------------------------
# Materialization


def _as_span(member: SyntaxNodeView | Span) -> Span:
    if isinstance(member, SyntaxNodeView):
        return member.span
    start, end = member
    return (int(start), int(end))


def attach_gaps(
    groups: Sequence[Sequence[SyntaxNodeView | Span]], doc: SourceDocument
) -> list[Chunk]:
    """Materialize node groups into chunks whose spans tile the whole file.

    Chunk *i* runs from the end of chunk *i-1* (0 for the first) to the end
    byte of group *i*'s last node, so every inter-node gap belongs to the
    chunk of the following node; the final chunk absorbs trailing bytes.
    Groups whose span would be empty (zero-width error-recovery nodes) are
    dropped.  Breadcrumbs are file-only placeholders here — see
    :func:`extract_breadcrumb`.
    """
    span_groups = [
        [_as_span(member) for member in group] for group in groups if len(group)
    ]
    file_len = len(doc.data)
    entries: list[tuple[int, int, tuple[Span, ...]]] = []
    previous_end = 0
    for spans in span_groups:
        group_end = spans[-1][1]
        if group_end < previous_end:
            raise ValueError("groups are not ordered by byte position")
        if group_end == previous_end:
            continue
        entries.append((previous_end, group_end, tuple(spans)))
        previous_end = group_end
    if entries:
        last_start, _, last_spans = entries[-1]
        entries[-1] = (last_start, file_len, last_spans)

    placeholder = Breadcrumb(doc.path)
    return [
        Chunk(
            doc_path=doc.path,
            span=(start, end),
            node_spans=node_spans,
            size=doc.non_ws_size(start, end),
            line_span=doc.line_span_of(start, end),
            breadcrumb=placeholder,
            index=i,
        )
        for i, (start, end, node_spans) in enumerate(entries)
    ]


def _renumber(chunks: list[Chunk]) -> list[Chunk]:
    return [
        chunk if chunk.index == i else replace(chunk, index=i)
        for i, chunk in enumerate(chunks)
    ]


def _normalize_budget(
    chunks: list[Chunk], doc: SourceDocument, budget: int
) -> list[Chunk]:
    """Re-split any chunk pushed over budget by non-whitespace gap bytes.

    Packing counts member-node sizes only; gaps between siblings are
    whitespace in ordinary source, so attached gaps normally add nothing.
    The exception is non-whitespace bytes outside any node — a UTF-8 BOM is
    the practical case — which can inflate a chunk past the budget.  Under
    the line-split policy that inflation is repaired here so the budget
    guarantee stays unconditional.
    """
    if all(chunk.size <= budget for chunk in chunks):
        return chunks
    out: list[Chunk] = []
    for chunk in chunks:
        if chunk.size <= budget:
            out.append(chunk)
            continue
        for piece in split_oversized_leaf(doc, chunk.span, budget):
            out.append(
                Chunk(
                    doc_path=chunk.doc_path,
                    span=piece,
                    node_spans=(piece,),
                    size=doc.non_ws_size(*piece),
                    line_span=doc.line_span_of(*piece),
                    breadcrumb=chunk.breadcrumb,
                    index=len(out),
                )
            )
    return _renumber(out)


# ---------------------------------------------------------------------------
# Breadcrumbs


def _node_name(tree: ParsedTree, index: int) -> str:
    name_index = int(tree.name_children[index])
    if name_index < 0:
        return ""
    start = int(tree.starts[name_index])
    end = int(tree.ends[name_index])
    return tree.source.data[start:end].decode("utf-8", "replace")


def extract_breadcrumb(
    chunk: Chunk, root: SyntaxNodeView, config: ChunkingConfig | None = None
) -> Breadcrumb:
    """Class/function enclosure path of the chunk's first node.

    Walks from the root down the chain of nodes whose spans contain the
    first node's span (the first node itself included), collecting names of
    nodes whose kind is class-like or function-like for the language,
    outermost first.  Nodes without a name field contribute an empty string
    (anonymous).  An arrow function bound to a declarator counts as
    function-like under the name of its declarator; unbound arrow functions
    are skipped.
    """
    config = config or ChunkingConfig()
    tree = root.tree
    doc = tree.source
    if chunk.node_spans:
        first_start, first_end = chunk.node_spans[0]
    else:
        first_start, first_end = chunk.span

    chain: list[int] = []
    index = root.index
    while True:
        chain.append(index)
        descend = -1
        for child in tree.child_indices(index):
            child_start = int(tree.starts[child])
            child_end = int(tree.ends[child])
            if first_start < first_end:
                contains = child_start <= first_start and first_end <= child_end
            else:  # zero-width first node: fall back to point containment
                contains = child_start <= first_start < child_end
            if contains:
                descend = child
                break
            if child_start > first_start:
                break
        if descend < 0:
            break
        index = descend

    class_kinds, function_kinds = _kind_sets(config, doc.language)
    classes: list[str] = []
    functions: list[str] = []
    for position, node_index in enumerate(chain):
        kind = tree.kind_names[int(tree.kind_ids[node_index])]
        if kind in class_kinds:
            classes.append(_node_name(tree, node_index))
        elif kind in function_kinds:
            functions.append(_node_name(tree, node_index))
        elif kind == "arrow_function" and position > 0:
            parent = chain[position - 1]
            parent_kind = tree.kind_names[int(tree.kind_ids[parent])]
            if parent_kind == "variable_declarator":
                functions.append(_node_name(tree, parent))
    return Breadcrumb(doc.path, tuple(classes), tuple(functions))


# ---------------------------------------------------------------------------
# Entry points


def chunk_document(
    doc: SourceDocument, config: ChunkingConfig | None = None
) -> list[Chunk]:
    """Chunk one document; the returned spans tile the file exactly.

    A file whose total non-whitespace size fits the budget comes back as a
    single whole-file chunk; an empty file yields no chunks.  Output is a
    pure function of (bytes, language, config).
    """
    config = config or ChunkingConfig()
    file_len = len(doc.data)
    if file_len == 0:
        return []
    total = doc.non_ws_size()
    root = parse(doc)
    if total <= config.max_chunk_size:
        whole = Chunk(
            doc_path=doc.path,
            span=(0, file_len),
            node_spans=(root.span,),
            size=total,
            line_span=doc.line_span_of(0, file_len),
            breadcrumb=Breadcrumb(doc.path),
            index=0,
        )
        return [replace(whole, breadcrumb=extract_breadcrumb(whole, root, config))]

    tree = root.tree
    packed = _pack_indices(tree, tree.child_indices(0), config)

    span_groups: list[list[Span]] = []
    for indices, oversized_leaf in packed:
        spans = [
            (int(tree.starts[i]), int(tree.ends[i])) for i in indices
        ]
        if oversized_leaf and config.oversize_policy == OVERSIZE_LINE_SPLIT:
            for piece in split_oversized_leaf(doc, spans[0], config.max_chunk_size):
                span_groups.append([piece])
        else:
            span_groups.append(spans)

    chunks = attach_gaps(span_groups, doc)
    if not chunks:
        # Degenerate tree (e.g. only zero-width nodes): keep byte coverage.
        chunks = attach_gaps([[(0, file_len)]], doc)
    if config.oversize_policy == OVERSIZE_LINE_SPLIT:
        chunks = _normalize_budget(chunks, doc, config.max_chunk_size)
    return [
        replace(chunk, breadcrumb=extract_breadcrumb(chunk, root, config))
        for chunk in chunks
    ]


def fixed_size_line_chunker(doc: SourceDocument, lines_per_chunk: int) -> list[Chunk]:
    """Baseline chunker: consecutive groups of N lines, ignoring syntax.

    The last group may be shorter.  Chunk spans tile the file, node spans
    are empty, and breadcrumbs carry the file path only.
    """
    if lines_per_chunk < 1:
        raise ValueError(f"lines_per_chunk must be >= 1, got {lines_per_chunk}")
    file_len = len(doc.data)
    if file_len == 0:
        return []
    line_count = doc.line_count
    boundaries = list(doc.line_offsets[:line_count]) + [file_len]
    breadcrumb = Breadcrumb(doc.path)
    chunks: list[Chunk] = []
    for index, first_line in enumerate(range(0, line_count, lines_per_chunk)):
        last_line = min(first_line + lines_per_chunk, line_count)
        start, end = boundaries[first_line], boundaries[last_line]
        chunks.append(
            Chunk(
                doc_path=doc.path,
                span=(start, end),
                node_spans=(),
                size=doc.non_ws_size(start, end),
                line_span=(first_line + 1, last_line),
                breadcrumb=breadcrumb,
                index=index,
            )
        )
    return chunks


def chunk_code(
    text: str | bytes,
    language: LanguageId | str,
    config: ChunkingConfig | None = None,
    path: str = "<memory>",
) -> list[Chunk]:
    """Chunk an in-memory snippet; language given by id or registry name."""
    if isinstance(language, str):
        language = get_language(language)
    doc = SourceDocument.from_text(text, language, path=path)
    return chunk_document(doc, config)


def chunk_file(
    path: str,
    config: ChunkingConfig | None = None,
    language: LanguageId | None = None,
) -> list[Chunk]:
    """Chunk a file from disk; language defaults to extension detection."""
    doc = SourceDocument.from_path(path, language=language)
    return chunk_document(doc, config)
