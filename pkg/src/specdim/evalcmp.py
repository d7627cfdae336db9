"""Paired-database retrieval comparison and timing harness.

Builds the original and reduced vector databases side by side, runs the
same queries through both, and quantifies how well the reduced database
agrees with the original: hit overlap (recall@k), rank agreement
(Spearman), topic purity for labeled corpora, and wall-clock speedup.

The standard synthetic corpus lives here too. It is a fixed-seed,
two-topic corpus of mock embeddings whose topics are separable by
construction, so agreement numbers are reproducible bit for bit on any
machine.
"""

from __future__ import annotations

import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from itertools import repeat

import numpy as np

from .corpus import SNIPPET_CHARS, mock_embed
from .errors import ValidationError
from .reducer import ReductionSpec, transform_embedding
from .store import (
    EmbeddingRecord,
    IndexKind,
    Metric,
    QueryResult,
    VectorIndex,
    build_index,
    search,
)

DEFAULT_TOPICS = ("alpha", "beta")


@dataclass(frozen=True)
class RetrievalComparison:
    """Agreement between one query's original and reduced result lists.

    recall_at_k divides the hit-set intersection by k, so a corpus
    smaller than k caps recall below 1.0 by design. rank_correlation is
    the Spearman coefficient over the union of both hit lists, with ids
    absent from a list ranked k+1 in it.
    """

    query_key: str
    k: int
    original_hits: tuple[int, ...]
    reduced_hits: tuple[int, ...]
    recall_at_k: float
    rank_correlation: float
    factor: float
    dims: tuple[int, int]
    original_ns: int
    reduced_ns: int


@dataclass(frozen=True)
class TopicPurityReport:
    """Fraction of retrieved hits that share the query's topic label."""

    query_topic: str
    retrieved_labels: tuple[str, ...]
    purity_at_k: float


@dataclass(frozen=True)
class BenchReport:
    """Median per-query search latency for both databases, in ns."""

    k: int
    repetitions: int
    n_queries: int
    dims: tuple[int, int]
    factor: float
    original_ns: float
    reduced_ns: float
    speedup: float


def thread_cap() -> int:
    """Worker count from the SPECDIM_THREADS env var.

    Unset, empty, or 0 picks an automatic default from the CPU count.
    A negative or non-integer value is a validation error.
    """
    raw = os.environ.get("SPECDIM_THREADS", "").strip()
    if not raw:
        value = 0
    else:
        try:
            value = int(raw)
        except ValueError as exc:
            raise ValidationError(
                f"SPECDIM_THREADS must be an integer, got {raw!r}"
            ) from exc
    if value < 0:
        raise ValidationError(f"SPECDIM_THREADS must be >= 0, got {value}")
    if value == 0:
        return min(8, os.cpu_count() or 1)
    return value


def _effective_factor(spec: ReductionSpec) -> float:
    if spec.factor is not None:
        return float(spec.factor)
    return spec.source_dim / spec.target_dim


def _unpack_dbs(dbs) -> tuple[VectorIndex, VectorIndex, ReductionSpec]:
    original, reduced = dbs
    spec = reduced.reduction
    if spec is None:
        raise ValidationError("the reduced index carries no reduction parameters")
    if original.dim != spec.source_dim:
        raise ValidationError(
            f"original index dimension {original.dim} does not match "
            f"the reduction source_dim {spec.source_dim}"
        )
    if original.metric is not reduced.metric:
        raise ValidationError(
            f"paired indexes must share a metric, got "
            f"{original.metric.value} and {reduced.metric.value}"
        )
    return original, reduced, spec


def build_paired_dbs(
    records,
    spec: ReductionSpec,
    metric: Metric = Metric.L2,
) -> tuple[VectorIndex, VectorIndex]:
    """Build the original-space and reduced-space databases side by side.

    Both indexes hold the same ids in the same order; the second stores
    the truncated amplitude spectrum of each record instead of the raw
    embedding, so it is target_dim/source_dim the size of the first.
    """
    records = tuple(records)
    original = build_index(records, metric=metric, kind=IndexKind.ORIGINAL)
    if original.dim != spec.source_dim:
        raise ValidationError(
            f"records have dimension {original.dim}, "
            f"reduction expects {spec.source_dim}"
        )
    reduced_records = [
        EmbeddingRecord(
            id=rec.id,
            doc_key=rec.doc_key,
            vector=transform_embedding(rec.vector.astype(np.float64), spec).amplitudes,
            snippet=rec.snippet,
        )
        for rec in records
    ]
    reduced = build_index(
        reduced_records, metric=metric, kind=IndexKind.TRANSFORMED, reduction=spec
    )
    return original, reduced


def _spearman_over_union(
    original_hits: tuple[int, ...], reduced_hits: tuple[int, ...], k: int
) -> float:
    """Spearman rank correlation over the union of both hit lists.

    An id present in one list but not the other is ranked k+1 in the
    list it is missing from. A union smaller than two ids has no rank
    variation to correlate and scores 1.0.
    """
    union = sorted(set(original_hits) | set(reduced_hits))
    if len(union) < 2:
        return 1.0

    def ranks(hits: tuple[int, ...]) -> np.ndarray:
        position = {hit_id: rank for rank, hit_id in enumerate(hits, start=1)}
        return np.asarray([position.get(u, k + 1) for u in union], dtype=np.float64)

    a = ranks(original_hits)
    b = ranks(reduced_hits)
    a -= a.mean()
    b -= b.mean()
    denom = float(np.sqrt((a @ a) * (b @ b)))
    if denom == 0.0:
        return 1.0 if np.array_equal(a, b) else 0.0
    return float((a @ b) / denom)


def compare_query(dbs, query_vector, k: int, query_key: str = "") -> RetrievalComparison:
    """Run one query through both databases and score their agreement.

    The original database is searched with the raw query; the reduced
    database with the query's truncated amplitude spectrum. Latencies
    cover the search calls only, not the transform.
    """
    original, reduced, spec = _unpack_dbs(dbs)
    query = np.asarray(query_vector, dtype=np.float64)

    start = time.perf_counter_ns()
    original_result = search(original, query, k)
    original_ns = time.perf_counter_ns() - start

    reduced_query = transform_embedding(query, spec).amplitudes
    start = time.perf_counter_ns()
    reduced_result = search(reduced, reduced_query, k)
    reduced_ns = time.perf_counter_ns() - start

    original_hits = tuple(original_result.ids)
    reduced_hits = tuple(reduced_result.ids)
    overlap = len(set(original_hits) & set(reduced_hits))
    return RetrievalComparison(
        query_key=query_key,
        k=k,
        original_hits=original_hits,
        reduced_hits=reduced_hits,
        recall_at_k=overlap / k,
        rank_correlation=_spearman_over_union(original_hits, reduced_hits, k),
        factor=_effective_factor(spec),
        dims=(spec.source_dim, spec.target_dim),
        original_ns=original_ns,
        reduced_ns=reduced_ns,
    )


def compare_queries(dbs, queries, k: int, query_keys=None) -> list[RetrievalComparison]:
    """compare_query over a batch, in input order.

    Queries are independent, so the batch may run on a thread pool
    sized by thread_cap(); results and all reported metrics do not
    depend on execution order.
    """
    query_list = list(queries)
    if query_keys is None:
        keys = [f"q{i}" for i in range(len(query_list))]
    else:
        keys = [str(key) for key in query_keys]
        if len(keys) != len(query_list):
            raise ValidationError(
                f"{len(keys)} query keys for {len(query_list)} queries"
            )
    workers = min(thread_cap(), len(query_list))
    if workers <= 1:
        return [
            compare_query(dbs, query, k, key)
            for query, key in zip(query_list, keys)
        ]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(compare_query, repeat(dbs), query_list, repeat(k), keys))


def _hit_labels(hit_ids, labels) -> list[str]:
    retrieved = []
    for hit_id in hit_ids:
        if hit_id not in labels:
            raise ValidationError(f"hit id {hit_id} has no topic label")
        retrieved.append(labels[hit_id])
    return retrieved


def topic_purity(result: QueryResult, labels, query_topic: str) -> TopicPurityReport:
    """Score how many hits share the query's topic label.

    labels maps record id to topic label; every hit id must be labeled.
    """
    retrieved = _hit_labels(result.ids, labels)
    if not retrieved:
        raise ValidationError("cannot score purity over zero hits")
    matches = sum(1 for label in retrieved if label == query_topic)
    return TopicPurityReport(
        query_topic=query_topic,
        retrieved_labels=tuple(retrieved),
        purity_at_k=matches / len(retrieved),
    )


def bench_search(dbs, queries, k: int, repetitions: int = 5) -> BenchReport:
    """Median per-query search latency for both databases.

    Each repetition times the whole query batch against one index; the
    first repetition is a warm-up and is discarded. Query transforms
    are precomputed so only the searches are on the clock.
    """
    original, reduced, spec = _unpack_dbs(dbs)
    query_list = [np.asarray(q, dtype=np.float64) for q in queries]
    if not query_list:
        raise ValidationError("bench_search needs at least one query")
    if repetitions < 3:
        raise ValidationError(f"repetitions must be >= 3, got {repetitions}")
    reduced_list = [transform_embedding(q, spec).amplitudes for q in query_list]

    def median_ns(index: VectorIndex, batch: list[np.ndarray]) -> float:
        samples = []
        for rep in range(repetitions + 1):
            start = time.perf_counter_ns()
            for q in batch:
                search(index, q, k)
            elapsed = time.perf_counter_ns() - start
            if rep > 0:
                samples.append(elapsed / len(batch))
        return float(np.median(samples))

    original_ns = median_ns(original, query_list)
    reduced_ns = median_ns(reduced, reduced_list)
    return BenchReport(
        k=k,
        repetitions=repetitions,
        n_queries=len(query_list),
        dims=(spec.source_dim, spec.target_dim),
        factor=_effective_factor(spec),
        original_ns=original_ns,
        reduced_ns=reduced_ns,
        speedup=original_ns / reduced_ns if reduced_ns > 0 else float("inf"),
    )


def _topic_vocabulary(topic: str, vocab_size: int) -> list[str]:
    return [f"{topic}{i:02d}" for i in range(vocab_size)]


def synthetic_topic_corpus(
    n_per_topic: int = 50,
    tokens_per_doc: int = 20,
    vocab_size: int = 50,
    dim: int = 768,
    seed: int = 42,
    topics: tuple[str, ...] = DEFAULT_TOPICS,
) -> tuple[list[EmbeddingRecord], dict[int, str]]:
    """The standard synthetic corpus: fixed-seed topical mock embeddings.

    Each topic owns a disjoint vocabulary of vocab_size invented words;
    each document draws tokens_per_doc of them without replacement, so
    documents within a topic overlap heavily and documents across
    topics share nothing. Returns the records (ids 0..n-1, doc_key
    "topic:i") and an id-to-topic label map.
    """
    if not topics:
        raise ValidationError("at least one topic is required")
    if len(set(topics)) != len(topics):
        raise ValidationError("topic names must be unique")
    if n_per_topic < 1:
        raise ValidationError(f"n_per_topic must be >= 1, got {n_per_topic}")
    if not 1 <= tokens_per_doc <= vocab_size:
        raise ValidationError(
            f"tokens_per_doc must be in [1, vocab_size], "
            f"got {tokens_per_doc} with vocab_size {vocab_size}"
        )
    rng = np.random.default_rng(seed)
    records: list[EmbeddingRecord] = []
    labels: dict[int, str] = {}
    next_id = 0
    for topic in topics:
        vocab = _topic_vocabulary(topic, vocab_size)
        for i in range(n_per_topic):
            picks = rng.choice(vocab_size, size=tokens_per_doc, replace=False)
            text = " ".join(vocab[j] for j in picks)
            records.append(
                EmbeddingRecord(
                    id=next_id,
                    doc_key=f"{topic}:{i}",
                    vector=mock_embed(text, dim, seed),
                    snippet=text[:SNIPPET_CHARS],
                )
            )
            labels[next_id] = topic
            next_id += 1
    return records, labels


def synthetic_query(
    topic: str,
    draw: int = 0,
    tokens_per_doc: int = 20,
    vocab_size: int = 50,
    dim: int = 768,
    seed: int = 42,
) -> tuple[str, np.ndarray]:
    """A fresh in-topic query drawn from a stream disjoint from the corpus.

    draw picks one of arbitrarily many distinct queries for the same
    topic. Returns the query text and its mock embedding, salted with
    the same seed as the corpus so self-consistency holds.
    """
    if not 1 <= tokens_per_doc <= vocab_size:
        raise ValidationError(
            f"tokens_per_doc must be in [1, vocab_size], "
            f"got {tokens_per_doc} with vocab_size {vocab_size}"
        )
    if draw < 0:
        raise ValidationError(f"draw must be >= 0, got {draw}")
    topic_tag = int.from_bytes(topic.encode("utf-8")[:8] or b"\x00", "little")
    rng = np.random.default_rng([seed, 7919, draw, topic_tag])
    vocab = _topic_vocabulary(topic, vocab_size)
    picks = rng.choice(vocab_size, size=tokens_per_doc, replace=False)
    text = " ".join(vocab[j] for j in picks)
    return text, mock_embed(text, dim, seed)


def comparison_report(comparisons, metric: Metric, labels=None, query_topics=None) -> dict:
    """Assemble the JSON-shaped comparison report.

    labels maps record id to topic label and query_topics maps
    query_key to the query's topic; when both cover a query, its entry
    gains a purity block for each database.
    """
    comps = list(comparisons)
    if not comps:
        raise ValidationError("cannot build a report over zero comparisons")
    entries = []
    for comp in comps:
        entry = {
            "query_key": comp.query_key,
            "k": comp.k,
            "factor": comp.factor,
            "dims": list(comp.dims),
            "recall_at_k": comp.recall_at_k,
            "rank_correlation": comp.rank_correlation,
            "original_hits": list(comp.original_hits),
            "reduced_hits": list(comp.reduced_hits),
            "latencies": {
                "original_ns": comp.original_ns,
                "reduced_ns": comp.reduced_ns,
            },
        }
        if labels is not None and query_topics and comp.query_key in query_topics:
            topic = query_topics[comp.query_key]
            original_labels = _hit_labels(comp.original_hits, labels)
            reduced_labels = _hit_labels(comp.reduced_hits, labels)
            entry["purity"] = {
                "query_topic": topic,
                "original": sum(
                    1 for label in original_labels if label == topic
                ) / len(original_labels),
                "reduced": sum(
                    1 for label in reduced_labels if label == topic
                ) / len(reduced_labels),
            }
        entries.append(entry)
    return {
        "metric": metric.value,
        "n_queries": len(entries),
        "mean_recall_at_k": float(np.mean([c.recall_at_k for c in comps])),
        "mean_rank_correlation": float(np.mean([c.rank_correlation for c in comps])),
        "queries": entries,
    }


def render_comparison_table(report: dict) -> str:
    """Render a comparison report as an aligned-column text table."""
    has_purity = any("purity" in entry for entry in report["queries"])
    headers = ["query_key", "k", "factor", "recall@k", "spearman", "orig_us", "red_us"]
    if has_purity:
        headers += ["orig_pur", "red_pur"]
    rows = []
    for entry in report["queries"]:
        row = [
            entry["query_key"],
            str(entry["k"]),
            f"{entry['factor']:g}",
            f"{entry['recall_at_k']:.3f}",
            f"{entry['rank_correlation']:+.3f}",
            f"{entry['latencies']['original_ns'] / 1e3:.1f}",
            f"{entry['latencies']['reduced_ns'] / 1e3:.1f}",
        ]
        if has_purity:
            purity = entry.get("purity")
            if purity is None:
                row += ["-", "-"]
            else:
                row += [f"{purity['original']:.3f}", f"{purity['reduced']:.3f}"]
        rows.append(row)
    widths = [
        max(len(header), max(len(row[i]) for row in rows))
        for i, header in enumerate(headers)
    ]
    lines = [
        "  ".join(h.ljust(widths[i]) for i, h in enumerate(headers)).rstrip(),
        "  ".join("-" * widths[i] for i in range(len(headers))),
    ]
    for row in rows:
        lines.append("  ".join(cell.ljust(widths[i]) for i, cell in enumerate(row)).rstrip())
    lines.append("")
    lines.append(
        f"mean recall@k {report['mean_recall_at_k']:.3f}  "
        f"mean spearman {report['mean_rank_correlation']:+.3f}  "
        f"over {report['n_queries']} queries"
    )
    return "\n".join(lines)
