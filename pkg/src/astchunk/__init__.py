"""Structure-aware source code chunking for retrieval pipelines.

The package parses source files with vendored tree-sitter grammars, splits
each syntax tree into chunks under a non-whitespace byte budget, greedily
merges adjacent siblings back together, and guarantees that concatenating a
file's chunk texts reproduces the file byte for byte.  A fixed-size line
chunker, a JSONL corpus pipeline, and a BM25 retrieval-evaluation harness
round out the toolkit.

>>> import astchunk
>>> chunks = astchunk.chunk_code("def f():\\n    return 1\\n", "python")
>>> [c.size for c in chunks]
[14]
"""

from __future__ import annotations

__version__ = "0.1.0"

from .chunking import (
    DEFAULT_MAX_CHUNK_SIZE,
    OVERSIZE_EMIT,
    OVERSIZE_LINE_SPLIT,
    OVERSIZE_POLICIES,
    Breadcrumb,
    Chunk,
    ChunkingConfig,
    attach_gaps,
    chunk_code,
    chunk_document,
    chunk_file,
    chunk_nodes,
    extract_breadcrumb,
    fixed_size_line_chunker,
    split_oversized_leaf,
)
from .document import SourceDocument, non_ws_size
from .errors import (
    AstChunkError,
    MalformedRecord,
    NativeBuildError,
    SpanOutOfBounds,
    UnregisteredLanguage,
)
from .evaluation import (
    AGGREGATIONS,
    DEFAULT_K_VALUES,
    DEFAULT_MAX_CONTEXT_LENGTH,
    Bm25Index,
    default_token_count,
    GoldSpan,
    Query,
    evaluate_strategies,
    judge,
    lexical_retrieve,
    ndcg_at_k,
    pack_context,
    precision_at_k,
    read_queries,
    recall_at_k,
    rescore_baseline_chunks,
    scores_to_lines,
    tokenize,
)
from .languages import (
    CSHARP,
    JAVA,
    PYTHON,
    TYPESCRIPT,
    LanguageId,
    LanguageInfo,
    detect_language,
    get_language,
    language_info,
    register_language,
    registered_languages,
)
from .parsing import ParsedTree, Parser, SyntaxNodeView, parse
from .pipeline import (
    DEFAULT_LINES_PER_CHUNK,
    STRATEGIES,
    STRATEGY_CAST,
    STRATEGY_FIXED_LINE,
    ChunkRecord,
    chunk_corpus,
    chunk_repository_to_lines,
    compute_stats,
    config_digest,
    iter_records,
    iter_source_files,
    read_records,
    record_from_chunk,
    record_to_line,
    walk_repository,
    write_records,
)

__all__ = [
    "__version__",
    # chunking
    "DEFAULT_MAX_CHUNK_SIZE",
    "OVERSIZE_EMIT",
    "OVERSIZE_LINE_SPLIT",
    "OVERSIZE_POLICIES",
    "Breadcrumb",
    "Chunk",
    "ChunkingConfig",
    "attach_gaps",
    "chunk_code",
    "chunk_document",
    "chunk_file",
    "chunk_nodes",
    "extract_breadcrumb",
    "fixed_size_line_chunker",
    "split_oversized_leaf",
    # documents
    "SourceDocument",
    "non_ws_size",
    # errors
    "AstChunkError",
    "MalformedRecord",
    "NativeBuildError",
    "SpanOutOfBounds",
    "UnregisteredLanguage",
    # evaluation
    "Bm25Index",
    "GoldSpan",
    "Query",
    "evaluate_strategies",
    "judge",
    "lexical_retrieve",
    "AGGREGATIONS",
    "DEFAULT_K_VALUES",
    "DEFAULT_MAX_CONTEXT_LENGTH",
    "default_token_count",
    "ndcg_at_k",
    "pack_context",
    "precision_at_k",
    "read_queries",
    "recall_at_k",
    "rescore_baseline_chunks",
    "scores_to_lines",
    "tokenize",
    # languages
    "CSHARP",
    "JAVA",
    "PYTHON",
    "TYPESCRIPT",
    "LanguageId",
    "LanguageInfo",
    "detect_language",
    "get_language",
    "language_info",
    "register_language",
    "registered_languages",
    # parsing
    "ParsedTree",
    "Parser",
    "SyntaxNodeView",
    "parse",
    # pipeline
    "DEFAULT_LINES_PER_CHUNK",
    "STRATEGIES",
    "STRATEGY_CAST",
    "STRATEGY_FIXED_LINE",
    "ChunkRecord",
    "chunk_corpus",
    "chunk_repository_to_lines",
    "compute_stats",
    "config_digest",
    "iter_records",
    "iter_source_files",
    "read_records",
    "record_from_chunk",
    "record_to_line",
    "walk_repository",
    "write_records",
]
