"""Repository walking, corpus chunking, JSONL records, and statistics.

The JSONL record schema is the package's interchange format: one JSON
object per line, UTF-8, keys in a fixed order so equal runs produce
byte-identical files.  Records are self-contained — they carry the chunk
text — so downstream indexers never need the original repository.
"""

from __future__ import annotations

import fnmatch
import hashlib
import json
import logging
import os
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import IO, Iterable, Iterator, Sequence

from .chunking import (
    Chunk,
    ChunkingConfig,
    chunk_document,
    fixed_size_line_chunker,
)
from .document import SourceDocument
from .errors import MalformedRecord
from .languages import LanguageId, detect_language, get_language

log = logging.getLogger("astchunk")

STRATEGY_CAST = "cast"
STRATEGY_FIXED_LINE = "fixed-line"
STRATEGIES = (STRATEGY_CAST, STRATEGY_FIXED_LINE)

DEFAULT_LINES_PER_CHUNK = 30

SCHEMA_VERSION = 1

#: Exact serialization order of record keys; "v" is always last.
RECORD_KEYS = (
    "id",
    "path",
    "language",
    "start_byte",
    "end_byte",
    "start_line",
    "end_line",
    "size_non_ws",
    "text",
    "breadcrumb",
    "strategy",
    "config_digest",
    "v",
)

_BREADCRUMB_KEYS = ("file", "classes", "functions")


@dataclass(frozen=True)
class ChunkRecord:
    """Serializable form of one chunk; ``id`` is ``"<path>:<index>"``.

    ``text`` is the chunk's bytes decoded as UTF-8 (lossily, with
    replacement characters, for files that are not valid UTF-8 — offsets
    stay byte-true either way).
    """

    id: str
    path: str
    language: str
    start_byte: int
    end_byte: int
    start_line: int
    end_line: int
    size_non_ws: int
    text: str
    breadcrumb_file: str
    breadcrumb_classes: tuple[str, ...]
    breadcrumb_functions: tuple[str, ...]
    strategy: str
    config_digest: str

    @property
    def line_count(self) -> int:
        return self.end_line - self.start_line + 1

    def to_json_obj(self) -> dict:
        return {
            "id": self.id,
            "path": self.path,
            "language": self.language,
            "start_byte": self.start_byte,
            "end_byte": self.end_byte,
            "start_line": self.start_line,
            "end_line": self.end_line,
            "size_non_ws": self.size_non_ws,
            "text": self.text,
            "breadcrumb": {
                "file": self.breadcrumb_file,
                "classes": list(self.breadcrumb_classes),
                "functions": list(self.breadcrumb_functions),
            },
            "strategy": self.strategy,
            "config_digest": self.config_digest,
            "v": SCHEMA_VERSION,
        }

    @classmethod
    def from_json_obj(cls, obj: dict) -> "ChunkRecord":
        breadcrumb = obj["breadcrumb"]
        return cls(
            id=obj["id"],
            path=obj["path"],
            language=obj["language"],
            start_byte=obj["start_byte"],
            end_byte=obj["end_byte"],
            start_line=obj["start_line"],
            end_line=obj["end_line"],
            size_non_ws=obj["size_non_ws"],
            text=obj["text"],
            breadcrumb_file=breadcrumb["file"],
            breadcrumb_classes=tuple(breadcrumb["classes"]),
            breadcrumb_functions=tuple(breadcrumb["functions"]),
            strategy=obj["strategy"],
            config_digest=obj["config_digest"],
        )


def config_digest(
    strategy: str,
    config: ChunkingConfig | None = None,
    lines_per_chunk: int = DEFAULT_LINES_PER_CHUNK,
) -> str:
    """Stable 16-hex-digit digest of everything that shapes the output.

    Computed over a canonical JSON rendering, so it is independent of dict
    iteration and interpreter hash randomization.
    """
    if strategy == STRATEGY_CAST:
        config = config or ChunkingConfig()
        kind_map = None
        if config.language_kind_map is not None:
            kind_map = {
                name: [sorted(classes), sorted(functions)]
                for name, (classes, functions) in sorted(
                    config.language_kind_map.items()
                )
            }
        payload = {
            "strategy": strategy,
            "max_chunk_size": config.max_chunk_size,
            "merge_enabled": config.merge_enabled,
            "oversize_policy": config.oversize_policy,
            "language_kind_map": kind_map,
        }
    elif strategy == STRATEGY_FIXED_LINE:
        payload = {"strategy": strategy, "lines_per_chunk": lines_per_chunk}
    else:
        raise ValueError(f"unknown strategy {strategy!r}")
    canonical = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:16]


def record_from_chunk(doc: SourceDocument, chunk: Chunk, strategy: str, digest: str) -> ChunkRecord:
    """Materialize one chunk into its serializable record."""
    start, end = chunk.span
    return ChunkRecord(
        id=f"{chunk.doc_path}:{chunk.index}",
        path=chunk.doc_path,
        language=doc.language.name,
        start_byte=start,
        end_byte=end,
        start_line=chunk.line_span[0],
        end_line=chunk.line_span[1],
        size_non_ws=chunk.size,
        text=doc.data[start:end].decode("utf-8", "replace"),
        breadcrumb_file=chunk.breadcrumb.file_path,
        breadcrumb_classes=chunk.breadcrumb.class_path,
        breadcrumb_functions=chunk.breadcrumb.function_path,
        strategy=strategy,
        config_digest=digest,
    )


# ---------------------------------------------------------------------------
# Repository walking


@dataclass
class WalkResult:
    """Documents found by a walk, plus what was skipped along the way."""

    documents: list[SourceDocument] = field(default_factory=list)
    skipped: int = 0
    errors: list[str] = field(default_factory=list)


def _matches(rel_path: str, patterns: Sequence[str]) -> bool:
    return any(fnmatch.fnmatch(rel_path, pattern) for pattern in patterns)


def iter_source_files(
    root: str | os.PathLike[str],
    include: Sequence[str] | None = None,
    exclude: Sequence[str] | None = None,
) -> tuple[list[tuple[str, str, LanguageId]], int, list[str]]:
    """List ``(abs_path, rel_path, language)`` under ``root``, sorted by
    relative path; returns (files, skipped_count, error_messages).

    Files whose extension maps to no language — or that the include/exclude
    globs filter out — count as skipped.  Symlinks are not followed.
    """
    rootpath = os.fspath(root)
    files: list[tuple[str, str, LanguageId]] = []
    skipped = 0
    errors: list[str] = []
    for dirpath, dirnames, filenames in os.walk(rootpath, followlinks=False):
        dirnames.sort()
        for filename in sorted(filenames):
            abs_path = os.path.join(dirpath, filename)
            if os.path.islink(abs_path):
                skipped += 1
                continue
            rel_path = os.path.relpath(abs_path, rootpath).replace(os.sep, "/")
            if include and not _matches(rel_path, include):
                skipped += 1
                continue
            if exclude and _matches(rel_path, exclude):
                skipped += 1
                continue
            language = detect_language(rel_path)
            if language is None:
                skipped += 1
                continue
            files.append((abs_path, rel_path, language))
    files.sort(key=lambda item: item[1])
    return files, skipped, errors


def walk_repository(
    root: str | os.PathLike[str],
    include: Sequence[str] | None = None,
    exclude: Sequence[str] | None = None,
) -> WalkResult:
    """Load every chunkable file under ``root`` in lexicographic order.

    Unreadable files are recorded as errors, not raised; files with no
    detectable language are skipped and counted.
    """
    files, skipped, errors = iter_source_files(root, include, exclude)
    result = WalkResult(skipped=skipped, errors=errors)
    for abs_path, rel_path, language in files:
        try:
            with open(abs_path, "rb") as fh:
                data = fh.read()
        except OSError as exc:
            result.errors.append(f"{rel_path}: {exc}")
            continue
        result.documents.append(
            SourceDocument(path=rel_path, data=data, language=language)
        )
    return result


# ---------------------------------------------------------------------------
# Corpus chunking


def _chunks_for(
    doc: SourceDocument,
    strategy: str,
    config: ChunkingConfig,
    lines_per_chunk: int,
) -> list[Chunk]:
    if strategy == STRATEGY_CAST:
        return chunk_document(doc, config)
    if strategy == STRATEGY_FIXED_LINE:
        return fixed_size_line_chunker(doc, lines_per_chunk)
    raise ValueError(f"unknown strategy {strategy!r}")


def chunk_corpus(
    docs: Iterable[SourceDocument],
    config: ChunkingConfig | None = None,
    strategy: str = STRATEGY_CAST,
    lines_per_chunk: int = DEFAULT_LINES_PER_CHUNK,
) -> Iterator[ChunkRecord]:
    """Chunk documents in order, yielding records in (path, index) order.

    A failure in one file skips that file with a logged diagnostic rather
    than aborting the stream.
    """
    config = config or ChunkingConfig()
    digest = config_digest(strategy, config, lines_per_chunk)
    for doc in docs:
        try:
            chunks = _chunks_for(doc, strategy, config, lines_per_chunk)
        except Exception:  # noqa: BLE001 - per-file isolation is the contract
            log.exception("skipping %s: chunking failed", doc.path)
            continue
        for chunk in chunks:
            yield record_from_chunk(doc, chunk, strategy, digest)


# --- parallel corpus run ----------------------------------------------------

_WORKER_STATE: dict = {}


def _worker_init(strategy: str, config: ChunkingConfig, lines_per_chunk: int) -> None:
    _WORKER_STATE["strategy"] = strategy
    _WORKER_STATE["config"] = config
    _WORKER_STATE["lines_per_chunk"] = lines_per_chunk
    _WORKER_STATE["digest"] = config_digest(strategy, config, lines_per_chunk)


def _worker_chunk_file(job: tuple[str, str, str]) -> tuple[list[str], str | None]:
    """Chunk one file into serialized JSONL lines (run inside a worker)."""
    abs_path, rel_path, language_name = job
    try:
        with open(abs_path, "rb") as fh:
            data = fh.read()
        doc = SourceDocument(path=rel_path, data=data, language=get_language(language_name))
        chunks = _chunks_for(
            doc,
            _WORKER_STATE["strategy"],
            _WORKER_STATE["config"],
            _WORKER_STATE["lines_per_chunk"],
        )
        lines = [
            record_to_line(record_from_chunk(doc, c, _WORKER_STATE["strategy"], _WORKER_STATE["digest"]))
            for c in chunks
        ]
        return lines, None
    except Exception as exc:  # noqa: BLE001 - reported to the parent
        return [], f"{rel_path}: {exc}"


def chunk_repository_to_lines(
    root: str | os.PathLike[str],
    strategy: str = STRATEGY_CAST,
    config: ChunkingConfig | None = None,
    lines_per_chunk: int = DEFAULT_LINES_PER_CHUNK,
    include: Sequence[str] | None = None,
    exclude: Sequence[str] | None = None,
    jobs: int = 1,
) -> tuple[list[str], int, list[str]]:
    """Walk + chunk a repository into JSONL lines, optionally in parallel.

    Workers process whole files and the parent re-sequences their outputs
    into walk order, so the emitted lines are byte-identical for any job
    count.  Returns (lines, skipped_count, error_messages).
    """
    config = config or ChunkingConfig()
    files, skipped, errors = iter_source_files(root, include, exclude)
    jobs = max(1, jobs)
    log.debug(
        "chunking %d files under %s (strategy=%s, jobs=%d, skipped=%d)",
        len(files), root, strategy, jobs, skipped,
    )
    out_lines: list[str] = []
    jobs_args = [(abs_path, rel, lang.name) for abs_path, rel, lang in files]
    if jobs == 1 or len(files) <= 1:
        _worker_init(strategy, config, lines_per_chunk)
        results = map(_worker_chunk_file, jobs_args)
        for lines, error in results:
            if error is not None:
                errors.append(error)
            out_lines.extend(lines)
    else:
        with ProcessPoolExecutor(
            max_workers=min(jobs, max(1, len(files))),
            initializer=_worker_init,
            initargs=(strategy, config, lines_per_chunk),
        ) as pool:
            for lines, error in pool.map(_worker_chunk_file, jobs_args, chunksize=4):
                if error is not None:
                    errors.append(error)
                out_lines.extend(lines)
    return out_lines, skipped, errors


# ---------------------------------------------------------------------------
# Serialization


def record_to_line(record: ChunkRecord) -> str:
    """One record as a compact JSON line (no trailing newline)."""
    return json.dumps(
        record.to_json_obj(), ensure_ascii=False, separators=(",", ":")
    )


def write_records(path: str | os.PathLike[str] | IO[str], records: Iterable[ChunkRecord]) -> int:
    """Write records as UTF-8 JSON lines; returns the number written."""
    if hasattr(path, "write"):
        return _write_records_fp(path, records)  # type: ignore[arg-type]
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        return _write_records_fp(fh, records)


def _write_records_fp(fh: IO[str], records: Iterable[ChunkRecord]) -> int:
    count = 0
    for record in records:
        fh.write(record_to_line(record))
        fh.write("\n")
        count += 1
    return count


_INT_FIELDS = ("start_byte", "end_byte", "start_line", "end_line", "size_non_ws")


def _validate_record_obj(obj: object, line_number: int) -> ChunkRecord:
    if not isinstance(obj, dict):
        raise MalformedRecord(line_number, "record is not a JSON object")
    missing = [key for key in RECORD_KEYS if key not in obj]
    if missing:
        raise MalformedRecord(line_number, f"missing keys: {', '.join(missing)}")
    unknown = [key for key in obj if key not in RECORD_KEYS]
    if unknown:
        raise MalformedRecord(line_number, f"unknown keys: {', '.join(unknown)}")
    if obj["v"] != SCHEMA_VERSION:
        raise MalformedRecord(line_number, f"unsupported schema version {obj['v']!r}")
    for key in _INT_FIELDS:
        if not isinstance(obj[key], int) or isinstance(obj[key], bool):
            raise MalformedRecord(line_number, f"field {key!r} is not an integer")
    for key in ("id", "path", "language", "text", "strategy", "config_digest"):
        if not isinstance(obj[key], str):
            raise MalformedRecord(line_number, f"field {key!r} is not a string")
    breadcrumb = obj["breadcrumb"]
    if (
        not isinstance(breadcrumb, dict)
        or sorted(breadcrumb) != sorted(_BREADCRUMB_KEYS)
        or not isinstance(breadcrumb["file"], str)
        or not isinstance(breadcrumb["classes"], list)
        or not isinstance(breadcrumb["functions"], list)
    ):
        raise MalformedRecord(line_number, "malformed breadcrumb object")
    try:
        return ChunkRecord.from_json_obj(obj)
    except (KeyError, TypeError) as exc:  # pragma: no cover - defensive
        raise MalformedRecord(line_number, str(exc)) from exc


def iter_records(path: str | os.PathLike[str] | IO[str]) -> Iterator[ChunkRecord]:
    """Stream records from a JSONL file (or open text stream), validating
    each line."""
    if hasattr(path, "read"):
        yield from _iter_records_fp(path)  # type: ignore[arg-type]
        return
    with open(path, "r", encoding="utf-8") as fh:
        yield from _iter_records_fp(fh)


def _iter_records_fp(fh: IO[str]) -> Iterator[ChunkRecord]:
    for line_number, line in enumerate(fh, start=1):
        stripped = line.strip()
        if not stripped:
            continue
        try:
            obj = json.loads(stripped)
        except json.JSONDecodeError as exc:
            raise MalformedRecord(line_number, f"invalid JSON: {exc.msg}") from exc
        yield _validate_record_obj(obj, line_number)


def read_records(path: str | os.PathLike[str] | IO[str]) -> list[ChunkRecord]:
    """Read a whole JSONL record file; raises MalformedRecord with the
    offending 1-based line number on any invalid line."""
    return list(iter_records(path))


# ---------------------------------------------------------------------------
# Statistics


def _summary(values: Sequence[int | float]) -> dict:
    if not values:
        return {"mean": 0.0, "median": 0.0, "max": 0}
    return {
        "mean": statistics.fmean(values),
        "median": float(statistics.median(values)),
        "max": max(values),
    }


def compute_stats(records: Iterable[ChunkRecord]) -> dict:
    """Aggregate a record stream into a stats report (a JSON-able dict).

    Reports file and chunk counts, mean/median/max non-whitespace sizes,
    mean/median line counts, and a per-language breakdown.
    """
    sizes: list[int] = []
    line_counts: list[int] = []
    paths: set[str] = set()
    by_language: dict[str, dict] = {}
    for record in records:
        sizes.append(record.size_non_ws)
        line_counts.append(record.line_count)
        paths.add(record.path)
        bucket = by_language.setdefault(
            record.language, {"paths": set(), "sizes": [], "line_counts": []}
        )
        bucket["paths"].add(record.path)
        bucket["sizes"].append(record.size_non_ws)
        bucket["line_counts"].append(record.line_count)

    report = {
        "file_count": len(paths),
        "chunk_count": len(sizes),
        "size_non_ws": _summary(sizes),
        "lines_per_chunk": {
            "mean": statistics.fmean(line_counts) if line_counts else 0.0,
            "median": float(statistics.median(line_counts)) if line_counts else 0.0,
        },
        "per_language": {
            language: {
                "file_count": len(bucket["paths"]),
                "chunk_count": len(bucket["sizes"]),
                "size_non_ws": _summary(bucket["sizes"]),
                "lines_per_chunk": {
                    "mean": statistics.fmean(bucket["line_counts"]),
                    "median": float(statistics.median(bucket["line_counts"])),
                },
            }
            for language, bucket in sorted(by_language.items())
        },
    }
    return report
