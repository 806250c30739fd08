"""Desk-scale retrieval evaluation over chunk records.

Relevance is judged by line overlap with gold spans; rankings come from a
small Okapi BM25 retriever over identifier-tokenized chunk text; quality is
summarized as Precision/Recall/nDCG at k.  The score-mapping utilities
project one chunking scheme's retrieval scores onto another's chunks via
per-line scores, letting a syntax-aware run rerank baseline chunks.
"""

from __future__ import annotations

import json
import math
import os
import re
from collections import Counter
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Sequence

from .errors import MalformedRecord
from .pipeline import ChunkRecord

DEFAULT_K_VALUES = (5, 10)

#: Default token budget for packed retrieval context.
DEFAULT_MAX_CONTEXT_LENGTH = 4000

AGGREGATE_MEAN = "mean"
AGGREGATE_MAX = "max"
AGGREGATE_SUM = "sum"
AGGREGATIONS = (AGGREGATE_MEAN, AGGREGATE_MAX, AGGREGATE_SUM)


@dataclass(frozen=True)
class GoldSpan:
    """One gold region: 1-based inclusive line range within a file."""

    path: str
    start_line: int
    end_line: int


@dataclass(frozen=True)
class Query:
    """A retrieval query with its non-empty set of gold spans."""

    id: str
    text: str
    gold: tuple[GoldSpan, ...]


def read_queries(path: str | os.PathLike[str]) -> list[Query]:
    """Load queries from JSON lines: {id, text, gold: [{path, start_line, end_line}]}."""
    queries: list[Query] = []
    with open(path, "r", encoding="utf-8") as fh:
        for line_number, line in enumerate(fh, start=1):
            stripped = line.strip()
            if not stripped:
                continue
            try:
                obj = json.loads(stripped)
            except json.JSONDecodeError as exc:
                raise MalformedRecord(line_number, f"invalid JSON: {exc.msg}") from exc
            try:
                gold = tuple(
                    GoldSpan(g["path"], int(g["start_line"]), int(g["end_line"]))
                    for g in obj["gold"]
                )
                query = Query(id=str(obj["id"]), text=str(obj["text"]), gold=gold)
            except (KeyError, TypeError) as exc:
                raise MalformedRecord(line_number, f"malformed query: {exc}") from exc
            if not query.gold:
                raise MalformedRecord(line_number, "query has no gold spans")
            queries.append(query)
    return queries


# ---------------------------------------------------------------------------
# Relevance judgment and rank metrics


def judge(record: ChunkRecord, gold: Iterable[GoldSpan]) -> bool:
    """A chunk is relevant iff it overlaps some gold span by >= 1 line."""
    for span in gold:
        if record.path != span.path:
            continue
        if record.start_line <= span.end_line and span.start_line <= record.end_line:
            return True
    return False


def _check_k(k: int) -> None:
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")


def precision_at_k(ranked_ids: Sequence[str], relevant: frozenset[str] | set[str], k: int) -> float:
    """Fraction of the top-k slots holding relevant chunks (missing slots count as misses)."""
    _check_k(k)
    hits = sum(1 for chunk_id in ranked_ids[:k] if chunk_id in relevant)
    return hits / k


def recall_at_k(ranked_ids: Sequence[str], relevant: frozenset[str] | set[str], k: int) -> float:
    """Fraction of all relevant chunks that appear in the top k."""
    _check_k(k)
    if not relevant:
        raise ValueError("recall is undefined with zero relevant chunks")
    hits = sum(1 for chunk_id in ranked_ids[:k] if chunk_id in relevant)
    return hits / len(relevant)


def ndcg_at_k(ranked_ids: Sequence[str], relevant: frozenset[str] | set[str], k: int) -> float:
    """nDCG with binary gains and 1/log2(rank+1) discounts, ideal-normalized."""
    _check_k(k)
    dcg = sum(
        1.0 / math.log2(rank + 1)
        for rank, chunk_id in enumerate(ranked_ids[:k], start=1)
        if chunk_id in relevant
    )
    ideal_hits = min(k, len(relevant))
    idcg = sum(1.0 / math.log2(rank + 1) for rank in range(1, ideal_hits + 1))
    return dcg / idcg if idcg > 0 else 0.0


# ---------------------------------------------------------------------------
# Lexical retrieval (Okapi BM25 over identifier tokens)

_NON_ALNUM = re.compile(r"[^0-9A-Za-z]+")
_CAMEL = re.compile(r"(?<=[a-z0-9])(?=[A-Z])|(?<=[A-Z])(?=[A-Z][a-z])")


def tokenize(text: str) -> list[str]:
    """Identifier-aware tokens: split on non-alphanumerics, then camelCase
    and ALLCAPS boundaries, lowercased (snake_case falls out of the first
    split)."""
    tokens: list[str] = []
    for word in _NON_ALNUM.split(text):
        if not word:
            continue
        for part in _CAMEL.split(word):
            if part:
                tokens.append(part.lower())
    return tokens


class Bm25Index:
    """Okapi BM25 (k1=1.2, b=0.75) over a fixed set of chunk records.

    idf uses the non-negative ln(1 + (N - df + 0.5)/(df + 0.5)) form, so
    terms appearing in most chunks score low but never negative.  Ties are
    broken by chunk id, making rankings fully deterministic.
    """

    def __init__(self, records: Sequence[ChunkRecord], k1: float = 1.2, b: float = 0.75):
        self.k1 = k1
        self.b = b
        self.ids = [record.id for record in records]
        self._tf: list[Counter[str]] = []
        self._doc_len: list[int] = []
        df: Counter[str] = Counter()
        for record in records:
            tokens = tokenize(record.text)
            counts = Counter(tokens)
            self._tf.append(counts)
            self._doc_len.append(len(tokens))
            df.update(counts.keys())
        self._count = len(records)
        self._avg_len = (
            sum(self._doc_len) / self._count if self._count else 0.0
        )
        self._idf = {
            term: math.log(1.0 + (self._count - n + 0.5) / (n + 0.5))
            for term, n in df.items()
        }

    def score(self, query_text: str, index: int) -> float:
        """BM25 score of one indexed chunk against a query."""
        counts = self._tf[index]
        doc_len = self._doc_len[index]
        norm = self.k1 * (1.0 - self.b + self.b * doc_len / self._avg_len) if self._avg_len else 0.0
        total = 0.0
        for term in tokenize(query_text):
            tf = counts.get(term)
            if not tf:
                continue
            total += self._idf[term] * tf * (self.k1 + 1.0) / (tf + norm)
        return total

    def retrieve(self, query_text: str, k: int | None = None) -> list[tuple[str, float]]:
        """Top-k (chunk id, score), descending score, ties by id ascending.

        Chunks sharing no term with the query (score 0) are omitted, so a
        query with no corpus terms returns an empty list.  ``k=None``
        returns every positive-scoring chunk.
        """
        scored = [
            (self.ids[i], score)
            for i in range(self._count)
            if (score := self.score(query_text, i)) > 0.0
        ]
        scored.sort(key=lambda item: (-item[1], item[0]))
        return scored if k is None else scored[:k]


def lexical_retrieve(
    query_text: str, records: Sequence[ChunkRecord], k: int | None = None
) -> list[tuple[str, float]]:
    """One-shot BM25 retrieval; builds a throwaway index over ``records``.

    For repeated queries over the same records, build one :class:`Bm25Index`
    and call :meth:`Bm25Index.retrieve`.
    """
    return Bm25Index(records).retrieve(query_text, k)


# ---------------------------------------------------------------------------
# Score mapping between chunking schemes


def scores_to_lines(
    scored_chunks: Iterable[tuple[ChunkRecord, float]],
) -> dict[str, dict[int, float]]:
    """Spread chunk scores onto their lines: {path: {1-based line: score}}.

    Every line covered by a scored chunk inherits that chunk's score; lines
    in no scored chunk are absent (treated as score 0 downstream).  If
    overlapping chunks are passed, the highest score wins.
    """
    line_scores: dict[str, dict[int, float]] = {}
    for record, score in scored_chunks:
        per_file = line_scores.setdefault(record.path, {})
        for line in range(record.start_line, record.end_line + 1):
            existing = per_file.get(line)
            if existing is None or score > existing:
                per_file[line] = score
    return line_scores


def rescore_baseline_chunks(
    line_scores: Mapping[str, Mapping[int, float]],
    baseline_records: Sequence[ChunkRecord],
    aggregate: str = AGGREGATE_MEAN,
) -> list[tuple[str, float]]:
    """Score each baseline chunk from its lines' scores and rerank.

    ``aggregate`` picks the line-score aggregation: arithmetic mean
    (default; scale-stable across chunk lengths), max, or sum.  Returns
    (chunk id, score) sorted descending, ties by id.
    """
    if aggregate not in AGGREGATIONS:
        raise ValueError(f"aggregate must be one of {AGGREGATIONS}, got {aggregate!r}")
    rescored: list[tuple[str, float]] = []
    for record in baseline_records:
        per_file = line_scores.get(record.path, {})
        values = [
            per_file.get(line, 0.0)
            for line in range(record.start_line, record.end_line + 1)
        ]
        if aggregate == AGGREGATE_MEAN:
            score = sum(values) / len(values)
        elif aggregate == AGGREGATE_MAX:
            score = max(values)
        else:
            score = sum(values)
        rescored.append((record.id, score))
    rescored.sort(key=lambda item: (-item[1], item[0]))
    return rescored


# ---------------------------------------------------------------------------
# Context packing


def default_token_count(text: str) -> int:
    """Crude but deterministic token estimate: ceil(UTF-8 bytes / 4)."""
    return -(-len(text.encode("utf-8")) // 4)


def pack_context(
    ranked_texts: Iterable[str],
    max_context_length: int,
    counter: Callable[[str], int] = default_token_count,
) -> str:
    """Concatenate ranked chunk texts up to a token budget.

    Chunks are appended in rank order; the first chunk that would overflow
    is truncated to the largest prefix still within budget and packing
    stops.  The result is always a prefix-concatenation of the inputs with
    total token count <= the budget.
    """
    if max_context_length < 0:
        raise ValueError("max_context_length must be >= 0")
    parts: list[str] = []
    used = 0
    for text in ranked_texts:
        cost = counter(text)
        if used + cost <= max_context_length:
            parts.append(text)
            used += cost
            continue
        remaining = max_context_length - used
        if remaining > 0:
            parts.append(_truncate_to_budget(text, remaining, counter))
        break
    return "".join(parts)


def _truncate_to_budget(text: str, budget: int, counter: Callable[[str], int]) -> str:
    """Largest prefix of ``text`` whose token count fits ``budget``."""
    low, high = 0, len(text)  # invariant: counter(text[:low]) <= budget
    while low < high:
        mid = (low + high + 1) // 2
        if counter(text[:mid]) <= budget:
            low = mid
        else:
            high = mid - 1
    return text[:low]


# ---------------------------------------------------------------------------
# Strategy comparison


def _ranked_ids(scored: Sequence[tuple[str, float]]) -> list[str]:
    return [chunk_id for chunk_id, _ in scored]


def _evaluate_rankings(
    rankings: Mapping[str, Sequence[str]],
    relevant_by_query: Mapping[str, frozenset[str]],
    k_values: Sequence[int],
) -> dict:
    """Macro-average P/R/nDCG at each k over queries with >= 1 relevant chunk."""
    scored_queries = [qid for qid, relevant in relevant_by_query.items() if relevant]
    zero_relevant = len(relevant_by_query) - len(scored_queries)
    metrics: dict = {
        "queries_evaluated": len(scored_queries),
        "queries_zero_relevant": zero_relevant,
    }
    for k in k_values:
        if scored_queries:
            precision = _mean(
                precision_at_k(rankings[qid], relevant_by_query[qid], k)
                for qid in scored_queries
            )
            recall = _mean(
                recall_at_k(rankings[qid], relevant_by_query[qid], k)
                for qid in scored_queries
            )
            ndcg = _mean(
                ndcg_at_k(rankings[qid], relevant_by_query[qid], k)
                for qid in scored_queries
            )
        else:
            precision = recall = ndcg = 0.0
        metrics[f"precision@{k}"] = precision
        metrics[f"recall@{k}"] = recall
        metrics[f"ndcg@{k}"] = ndcg
    return metrics


def _mean(values: Iterable[float]) -> float:
    values = list(values)
    return sum(values) / len(values) if values else 0.0


def evaluate_strategies(
    cast_records: Sequence[ChunkRecord],
    baseline_records: Sequence[ChunkRecord],
    queries: Sequence[Query],
    k_values: Sequence[int] = DEFAULT_K_VALUES,
    aggregate: str = AGGREGATE_MEAN,
) -> dict:
    """Compare retrieval quality of two chunk sets on the same queries.

    Three runs are reported: BM25 over the syntax-aware records ("cast"),
    BM25 over the baseline records ("fixed-line"), and the score-mapped
    alignment ("fixed-line-mapped") where the syntax-aware run's scores are
    spread over lines and aggregated to rerank the baseline chunks.
    Queries with zero relevant chunks for a given chunk set are excluded
    from that run's macro-averages and counted separately.
    """
    k_values = sorted(set(k_values))
    cast_by_id = {record.id: record for record in cast_records}
    cast_index = Bm25Index(cast_records)
    base_index = Bm25Index(baseline_records)

    cast_relevant: dict[str, frozenset[str]] = {}
    base_relevant: dict[str, frozenset[str]] = {}
    cast_rankings: dict[str, list[str]] = {}
    base_rankings: dict[str, list[str]] = {}
    mapped_rankings: dict[str, list[str]] = {}
    max_k = max(k_values)

    for query in queries:
        cast_relevant[query.id] = frozenset(
            record.id for record in cast_records if judge(record, query.gold)
        )
        base_relevant[query.id] = frozenset(
            record.id for record in baseline_records if judge(record, query.gold)
        )
        cast_scored_full = cast_index.retrieve(query.text, k=None)
        cast_rankings[query.id] = _ranked_ids(cast_scored_full[:max_k])
        base_rankings[query.id] = _ranked_ids(base_index.retrieve(query.text, k=max_k))

        line_scores = scores_to_lines(
            (cast_by_id[chunk_id], score) for chunk_id, score in cast_scored_full
        )
        mapped = rescore_baseline_chunks(line_scores, baseline_records, aggregate)
        mapped_rankings[query.id] = _ranked_ids(mapped[:max_k])

    return {
        "k_values": list(k_values),
        "query_count": len(queries),
        "score_aggregation": aggregate,
        "strategies": {
            "cast": _evaluate_rankings(cast_rankings, cast_relevant, k_values),
            "fixed-line": _evaluate_rankings(base_rankings, base_relevant, k_values),
            "fixed-line-mapped": _evaluate_rankings(
                mapped_rankings, base_relevant, k_values
            ),
        },
    }
