"""Command-line interface: ``astchunk chunk | stats | eval``.

Exit codes: 0 success, 1 runtime failure (I/O, native toolchain), 2 usage
or configuration errors (unknown flags, invalid values, malformed input
records).  A flat JSON config file may supply any long-option value via
``--config``; explicit flags always win over file values.  Diagnostic
verbosity is controlled by the ``ASTCHUNK_LOG`` environment variable
(debug/info/warning/error).
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from typing import Any, Callable, Sequence

from . import __version__
from .chunking import ChunkingConfig, OVERSIZE_POLICIES
from .errors import AstChunkError, MalformedRecord
from .evaluation import (
    AGGREGATE_MEAN,
    AGGREGATIONS,
    DEFAULT_MAX_CONTEXT_LENGTH,
    Bm25Index,
    default_token_count,
    evaluate_strategies,
    pack_context,
    read_queries,
)
from .pipeline import (
    DEFAULT_LINES_PER_CHUNK,
    STRATEGIES,
    STRATEGY_CAST,
    chunk_repository_to_lines,
    compute_stats,
    iter_records,
    read_records,
)

log = logging.getLogger("astchunk")

_LOG_LEVELS = {
    "debug": logging.DEBUG,
    "info": logging.INFO,
    "warning": logging.WARNING,
    "error": logging.ERROR,
}


class UsageError(AstChunkError):
    """Invalid flag/config combination; maps to exit code 2."""


def _setup_logging() -> None:
    raw = os.environ.get("ASTCHUNK_LOG", "warning").strip().lower()
    level = _LOG_LEVELS.get(raw)
    if level is None:
        level = logging.WARNING
    logging.basicConfig(
        stream=sys.stderr, level=level, format="%(levelname)s %(name)s: %(message)s"
    )
    log.setLevel(level)


# ---------------------------------------------------------------------------
# Config-file merging

#: Config-file keys accepted per subcommand (flat JSON document).
_CONFIG_KEYS = {
    "chunk": {
        "strategy",
        "max_chunk_size",
        "lines_per_chunk",
        "merge_enabled",
        "oversize_policy",
        "include",
        "exclude",
        "jobs",
        "output",
    },
    "stats": {"output"},
    "eval": {"k", "max_context_length", "aggregate", "output"},
}


def _load_config_file(path: str | None, subcommand: str) -> dict[str, Any]:
    if not path:
        return {}
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise UsageError(f"cannot read config file: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise UsageError(f"config file is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise UsageError("config file must hold a flat JSON object")
    unknown = sorted(set(data) - _CONFIG_KEYS[subcommand])
    if unknown:
        raise UsageError(
            f"unknown config keys for '{subcommand}': {', '.join(unknown)}"
        )
    return data


def _merged(args: argparse.Namespace, file_config: dict, key: str, default: Any) -> Any:
    """Flag value if given, else config-file value, else hard default."""
    flag_value = getattr(args, key, None)
    if flag_value is not None:
        return flag_value
    if key in file_config:
        return file_config[key]
    return default


def _positive_int(value: Any, name: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int) or value < 1:
        raise UsageError(f"{name} must be a positive integer, got {value!r}")
    return value


def _write_text(path: str, content: str) -> None:
    if path == "-":
        sys.stdout.write(content)
        return
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(content)


# ---------------------------------------------------------------------------
# Subcommands


def cmd_chunk(args: argparse.Namespace) -> int:
    file_config = _load_config_file(args.config, "chunk")
    strategy = _merged(args, file_config, "strategy", STRATEGY_CAST)
    if strategy not in STRATEGIES:
        raise UsageError(f"strategy must be one of {STRATEGIES}, got {strategy!r}")
    max_chunk_size = _positive_int(
        _merged(args, file_config, "max_chunk_size", ChunkingConfig().max_chunk_size),
        "max_chunk_size",
    )
    lines_per_chunk = _positive_int(
        _merged(args, file_config, "lines_per_chunk", DEFAULT_LINES_PER_CHUNK),
        "lines_per_chunk",
    )
    merge_enabled = _merged(args, file_config, "merge_enabled", True)
    if not isinstance(merge_enabled, bool):
        raise UsageError(f"merge_enabled must be a boolean, got {merge_enabled!r}")
    oversize_policy = _merged(
        args, file_config, "oversize_policy", OVERSIZE_POLICIES[0]
    )
    if oversize_policy not in OVERSIZE_POLICIES:
        raise UsageError(
            f"oversize_policy must be one of {OVERSIZE_POLICIES}, got {oversize_policy!r}"
        )
    include = _merged(args, file_config, "include", None)
    exclude = _merged(args, file_config, "exclude", None)
    jobs = _positive_int(
        _merged(args, file_config, "jobs", os.cpu_count() or 1), "jobs"
    )
    output = _merged(args, file_config, "output", "-")

    if not os.path.isdir(args.root):
        raise UsageError(f"root is not a directory: {args.root}")

    config = ChunkingConfig(
        max_chunk_size=max_chunk_size,
        merge_enabled=merge_enabled,
        oversize_policy=oversize_policy,
    )
    lines, skipped, errors = chunk_repository_to_lines(
        args.root,
        strategy=strategy,
        config=config,
        lines_per_chunk=lines_per_chunk,
        include=include,
        exclude=exclude,
        jobs=jobs,
    )
    _write_text(output, "".join(line + "\n" for line in lines))
    for message in errors:
        print(f"astchunk: error: {message}", file=sys.stderr)
    print(
        f"astchunk: wrote {len(lines)} records; skipped {skipped} files",
        file=sys.stderr,
    )
    return 0


def cmd_stats(args: argparse.Namespace) -> int:
    file_config = _load_config_file(args.config, "stats")
    output = _merged(args, file_config, "output", "-")
    report = compute_stats(iter_records(args.records))
    _write_text(output, json.dumps(report, indent=2) + "\n")
    return 0


def cmd_eval(args: argparse.Namespace) -> int:
    file_config = _load_config_file(args.config, "eval")
    k_values = _merged(args, file_config, "k", None) or [5, 10]
    if isinstance(k_values, int):
        k_values = [k_values]
    k_values = [_positive_int(k, "k") for k in k_values]
    max_context_length = _merged(
        args, file_config, "max_context_length", DEFAULT_MAX_CONTEXT_LENGTH
    )
    if isinstance(max_context_length, bool) or not isinstance(max_context_length, int) or max_context_length < 0:
        raise UsageError(
            f"max_context_length must be a non-negative integer, got {max_context_length!r}"
        )
    aggregate = _merged(args, file_config, "aggregate", AGGREGATE_MEAN)
    if aggregate not in AGGREGATIONS:
        raise UsageError(f"aggregate must be one of {AGGREGATIONS}, got {aggregate!r}")
    output = _merged(args, file_config, "output", "-")

    cast_records = read_records(args.cast_records)
    baseline_records = read_records(args.baseline_records)
    queries = read_queries(args.queries)

    report = evaluate_strategies(
        cast_records, baseline_records, queries, k_values, aggregate
    )
    report["max_context_length"] = max_context_length
    report["context_tokens"] = _context_usage(
        cast_records, baseline_records, queries, min(k_values), max_context_length
    )
    _write_text(output, json.dumps(report, indent=2) + "\n")
    return 0


def _context_usage(cast_records, baseline_records, queries, k, budget) -> dict:
    """Mean packed-context token count per strategy at the smallest k."""
    usage: dict[str, float] = {}
    for name, records in (("cast", cast_records), ("fixed-line", baseline_records)):
        by_id = {record.id: record for record in records}
        index = Bm25Index(records)
        totals = []
        for query in queries:
            ranked = index.retrieve(query.text, k=k)
            packed = pack_context(
                (by_id[chunk_id].text for chunk_id, _ in ranked), budget
            )
            totals.append(default_token_count(packed))
        usage[name] = sum(totals) / len(totals) if totals else 0.0
    return usage


# ---------------------------------------------------------------------------
# Parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="astchunk",
        description="Structure-aware source code chunking and retrieval evaluation.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    subparsers = parser.add_subparsers(dest="subcommand", required=True)

    chunk = subparsers.add_parser(
        "chunk", help="walk a repository and emit chunk records as JSON lines"
    )
    chunk.add_argument("root", help="repository root directory")
    chunk.add_argument("-o", "--output", help="output JSONL path (default: stdout)")
    chunk.add_argument(
        "--strategy",
        choices=STRATEGIES,
        help="chunking strategy (default: cast)",
    )
    chunk.add_argument(
        "--max-chunk-size",
        dest="max_chunk_size",
        type=int,
        help="non-whitespace byte budget per chunk (default: 2000)",
    )
    chunk.add_argument(
        "--lines",
        dest="lines_per_chunk",
        type=int,
        help="lines per chunk for the fixed-line strategy (default: 30)",
    )
    chunk.add_argument(
        "--merge",
        dest="merge_enabled",
        action=argparse.BooleanOptionalAction,
        help="greedy sibling merging; --no-merge selects split-only mode",
    )
    chunk.add_argument(
        "--oversize-policy",
        dest="oversize_policy",
        choices=OVERSIZE_POLICIES,
        help="handling of childless nodes over the budget (default: line-split)",
    )
    chunk.add_argument(
        "--include",
        action="append",
        help="glob of relative paths to include (repeatable; default: all)",
    )
    chunk.add_argument(
        "--exclude",
        action="append",
        help="glob of relative paths to exclude (repeatable)",
    )
    chunk.add_argument(
        "--jobs",
        type=int,
        help="parallel worker processes (default: logical cores); output is "
        "byte-identical regardless",
    )
    chunk.add_argument("--config", help="flat JSON config file; flags win")
    chunk.set_defaults(func=cmd_chunk)

    stats = subparsers.add_parser(
        "stats", help="aggregate a JSONL record file into corpus statistics"
    )
    stats.add_argument("records", help="chunk records (JSONL)")
    stats.add_argument("-o", "--output", help="output JSON path (default: stdout)")
    stats.add_argument("--config", help="flat JSON config file; flags win")
    stats.set_defaults(func=cmd_stats)

    evaluate = subparsers.add_parser(
        "eval",
        help="compare retrieval quality of two record files on a query set",
    )
    evaluate.add_argument("cast_records", help="syntax-aware chunk records (JSONL)")
    evaluate.add_argument("baseline_records", help="baseline chunk records (JSONL)")
    evaluate.add_argument("--queries", required=True, help="queries file (JSONL)")
    evaluate.add_argument(
        "--k",
        dest="k",
        action="append",
        type=int,
        help="rank cutoff; repeatable (default: 5 and 10)",
    )
    evaluate.add_argument(
        "--max-context-length",
        dest="max_context_length",
        type=int,
        help="token budget for packed-context reporting (default: 4000)",
    )
    evaluate.add_argument(
        "--aggregate",
        choices=AGGREGATIONS,
        help="line-score aggregation for the mapped rerank (default: mean)",
    )
    evaluate.add_argument("-o", "--output", help="output JSON path (default: stdout)")
    evaluate.add_argument("--config", help="flat JSON config file; flags win")
    evaluate.set_defaults(func=cmd_eval)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    _setup_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    func: Callable[[argparse.Namespace], int] = args.func
    try:
        return func(args)
    except (UsageError, MalformedRecord) as exc:
        print(f"astchunk: error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"astchunk: error: {exc}", file=sys.stderr)
        return 2
    except AstChunkError as exc:
        print(f"astchunk: error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"astchunk: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
