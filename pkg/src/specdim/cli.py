"""Command-line pipeline: chunk, embed, transform, index, query, report.

Subcommands compose through files. Every machine-readable artifact goes
to stdout or to a file named by a flag; log lines go to stderr only, so
redirecting stdout always yields clean data. Exit codes: 0 on success,
1 for validation and usage errors, 2 for file and format errors.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .corpus import (
    SNIPPET_CHARS,
    ChunkingConfig,
    chunk_text,
    mock_embed,
    read_chunks,
    read_embeddings,
    write_chunks,
    write_embeddings,
)
from .errors import FormatError, ParseError, SpecdimError, ValidationError
from .evalcmp import (
    bench_search,
    build_paired_dbs,
    compare_queries,
    comparison_report,
    render_comparison_table,
)
from .mds import mds_project, pairwise_distances
from .reducer import ReductionSpec, make_spec, transform_embedding
from .store import (
    EmbeddingRecord,
    IndexKind,
    Metric,
    build_index,
    load_index,
    save_index,
    search,
)

log = logging.getLogger("specdim")


class _Parser(argparse.ArgumentParser):
    """argparse with usage failures reported as exit code 1, not 2."""

    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _embedding_format(path: Path) -> str:
    return "jsonl" if path.suffix.lower() == ".jsonl" else "bin"


def _key_prefix(key: str) -> str:
    return key.split(":", 1)[0]


def _sanitize_cell(text: str | None) -> str:
    if text is None:
        return ""
    return " ".join(text.split())


def _load_query_vector(path: Path) -> np.ndarray:
    """Query vector from an embedding file (first record) or a JSON array."""
    if path.suffix.lower() in {".bin", ".jsonl"}:
        records = read_embeddings(path)
        if not records:
            raise ValidationError(f"{path} holds no records to query with")
        return records[0].vector.astype(np.float64)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: invalid JSON ({exc})") from exc
    vector = np.asarray(data, dtype=np.float64)
    if vector.ndim != 1 or vector.size == 0:
        raise ValidationError(f"{path} must hold a flat JSON array of numbers")
    return vector


def _load_queries(path: Path, dim: int, seed: int | None) -> tuple[list[np.ndarray], list[str]]:
    """Queries from a JSONL file; each line carries 'vector' or 'text'.

    Text queries go through the mock embedder and therefore need a seed.
    Keys come from 'doc_key', falling back to 'id', then the line number.
    """
    vectors: list[np.ndarray] = []
    keys: list[str] = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"{path}: line {lineno}: invalid JSON ({exc})") from exc
            if not isinstance(obj, dict):
                raise ParseError(f"{path}: line {lineno}: expected a JSON object")
            if "doc_key" in obj:
                key = str(obj["doc_key"])
            elif "id" in obj:
                key = str(obj["id"])
            else:
                key = f"q{lineno}"
            if "vector" in obj:
                vector = np.asarray(obj["vector"], dtype=np.float64)
                if vector.ndim != 1 or vector.size != dim:
                    raise ValidationError(
                        f"{path}: line {lineno}: query dimension "
                        f"{vector.size}, expected {dim}"
                    )
            elif "text" in obj:
                if seed is None:
                    raise ValidationError(
                        f"{path}: line {lineno}: text queries need --seed "
                        f"for the mock embedder"
                    )
                vector = mock_embed(str(obj["text"]), dim, seed)
            else:
                raise ParseError(
                    f"{path}: line {lineno}: query needs a 'vector' or 'text' field"
                )
            vectors.append(vector)
            keys.append(key)
    if not vectors:
        raise ValidationError(f"{path} holds no queries")
    return vectors, keys


def _cmd_chunk(args) -> int:
    source = Path(args.infile).read_text(encoding="utf-8")
    splitter = "\n" if args.splitter == "nl" else args.splitter
    config = ChunkingConfig(max_tokens=args.max_tokens, splitter=splitter)
    source_id = args.source_id or Path(args.infile).stem
    chunks = chunk_text(source, config, source_id=source_id)
    if not chunks:
        raise ValidationError(f"{args.infile} produced no chunks")
    write_chunks(chunks, args.out)
    oversized = sum(1 for c in chunks if c.oversized)
    log.info("wrote %d chunks to %s", len(chunks), args.out)
    if oversized:
        log.warning("%d chunks exceed max_tokens and were kept whole", oversized)
    return 0


def _cmd_mock_embed(args) -> int:
    pairs = read_chunks(args.infile)
    if not pairs:
        raise ValidationError(f"{args.infile} holds no chunks")
    records = [
        EmbeddingRecord(
            id=chunk_id,
            doc_key=chunk.doc_key,
            vector=mock_embed(chunk.text, args.dim, args.seed),
            snippet=chunk.text[:SNIPPET_CHARS],
        )
        for chunk_id, chunk in pairs
    ]
    out = Path(args.out)
    write_embeddings(records, out, format=_embedding_format(out))
    log.info("embedded %d chunks at dim %d into %s", len(records), args.dim, out)
    return 0


def _cmd_transform(args) -> int:
    records = read_embeddings(args.infile)
    if not records:
        raise ValidationError(f"{args.infile} holds no records")
    dim = records[0].vector.size
    if args.target_dim is not None:
        spec = ReductionSpec(source_dim=dim, target_dim=args.target_dim, factor=None)
    else:
        spec = make_spec(dim, args.factor)
    transformed = [
        EmbeddingRecord(
            id=rec.id,
            doc_key=rec.doc_key,
            vector=transform_embedding(rec.vector.astype(np.float64), spec).amplitudes,
            snippet=rec.snippet,
        )
        for rec in records
    ]
    out = Path(args.out)
    write_embeddings(transformed, out, format=_embedding_format(out))
    log.info(
        "transformed %d records from dim %d to dim %d into %s",
        len(transformed), spec.source_dim, spec.target_dim, out,
    )
    return 0


def _cmd_index(args) -> int:
    records = read_embeddings(args.infile)
    if not records:
        raise ValidationError(f"{args.infile} holds no records")
    metric = Metric(args.metric)
    if args.kind == "transformed":
        if args.source_dim is None:
            raise ValidationError("--kind transformed requires --source-dim")
        dim = records[0].vector.size
        reduction = ReductionSpec(source_dim=args.source_dim, target_dim=dim, factor=None)
        index = build_index(
            records, metric=metric, kind=IndexKind.TRANSFORMED, reduction=reduction
        )
    else:
        if args.source_dim is not None:
            raise ValidationError("--source-dim only applies to --kind transformed")
        index = build_index(records, metric=metric, kind=IndexKind.ORIGINAL)
    save_index(index, args.out)
    log.info(
        "indexed %d records (dim %d, %s, %s) into %s",
        len(index), index.dim, metric.value, args.kind, args.out,
    )
    return 0


def _cmd_query(args) -> int:
    index = load_index(args.index)
    if args.query_vec is not None:
        query = _load_query_vector(Path(args.query_vec))
    else:
        if args.seed is None:
            raise ValidationError("--query-text requires --seed for the mock embedder")
        if args.dim is not None:
            dim = args.dim
        elif index.kind is IndexKind.TRANSFORMED and index.reduction is not None:
            dim = index.reduction.source_dim
        else:
            dim = index.dim
        query = mock_embed(args.query_text, dim, args.seed)

    if args.transform_factor is not None:
        spec = make_spec(query.size, args.transform_factor)
        query = transform_embedding(query, spec).amplitudes
    elif (
        index.kind is IndexKind.TRANSFORMED
        and index.reduction is not None
        and query.size == index.reduction.source_dim
        and query.size != index.dim
    ):
        query = transform_embedding(query, index.reduction).amplitudes

    result = search(index, query, args.k)
    writer = csv.writer(sys.stdout, delimiter="\t", lineterminator="\n")
    snippets = {rec.id: rec.snippet for rec in index.records}
    for rank, (hit_id, doc_key, distance) in enumerate(result.hits, start=1):
        writer.writerow(
            [rank, hit_id, f"{distance:.9g}", doc_key, _sanitize_cell(snippets[hit_id])]
        )
    log.info("searched %d records, returned %d hits", len(index), len(result.hits))
    return 0


def _cmd_compare(args) -> int:
    records = read_embeddings(args.emb)
    if not records:
        raise ValidationError(f"{args.emb} holds no records")
    dim = records[0].vector.size
    metric = Metric(args.metric)
    spec = make_spec(dim, args.factor)
    dbs = build_paired_dbs(records, spec, metric=metric)
    queries, keys = _load_queries(Path(args.queries), dim, args.seed)
    comparisons = compare_queries(dbs, queries, args.k, keys)

    labels = {rec.id: _key_prefix(rec.doc_key) for rec in records}
    query_topics = {key: _key_prefix(key) for key in keys if ":" in key}
    report = comparison_report(
        comparisons, metric=metric, labels=labels, query_topics=query_topics
    )

    report_path = Path(args.report)
    with open(report_path, "w", encoding="utf-8") as fh:
        json.dump(report, fh, indent=2)
        fh.write("\n")
    log.info("wrote comparison report for %d queries to %s", len(queries), report_path)

    if not args.no_chart:
        from .plotting import save_comparison_chart

        chart_path = Path(args.chart) if args.chart else report_path.with_suffix(".svg")
        save_comparison_chart(report, chart_path)
        log.info("wrote comparison chart to %s", chart_path)

    print(render_comparison_table(report))
    return 0


def _cmd_project(args) -> int:
    records = read_embeddings(args.emb)
    if not records:
        raise ValidationError(f"{args.emb} holds no records")
    metric = Metric(args.metric)
    vectors = [rec.vector.astype(np.float64) for rec in records]
    keys = [rec.doc_key for rec in records]
    labels = [_key_prefix(rec.doc_key) for rec in records]

    if args.query_vec is not None:
        vectors.append(_load_query_vector(Path(args.query_vec)))
        keys.append("query")
        labels.append("query")
    elif args.query_text is not None:
        dim = records[0].vector.size
        vectors.append(mock_embed(args.query_text, dim, args.seed))
        keys.append("query")
        labels.append("query")

    delta = pairwise_distances(np.stack(vectors), metric=metric)
    result = mds_project(
        delta, seed=args.seed, max_iter=args.max_iter, restarts=args.restarts
    )
    log.info(
        "projected %d points to 2-D, stress %.6g after %d iterations%s",
        len(vectors), result.stress, result.iterations,
        "" if result.converged else " (hit max-iter)",
    )

    with open(args.out, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["doc_key", "label", "x", "y"])
        for key, label, point in zip(keys, labels, result.coordinates):
            writer.writerow([key, label, f"{point[0]:.9g}", f"{point[1]:.9g}"])
    log.info("wrote %d coordinate rows to %s", len(keys), args.out)

    if args.svg is not None:
        from .plotting import save_scatter

        save_scatter(
            result.coordinates, labels, args.svg,
            title=f"MDS projection ({metric.value})",
        )
        log.info("wrote scatter figure to %s", args.svg)
    return 0


def _cmd_bench(args) -> int:
    records = read_embeddings(args.emb)
    if not records:
        raise ValidationError(f"{args.emb} holds no records")
    dim = records[0].vector.size
    metric = Metric(args.metric)
    spec = make_spec(dim, args.factor)
    dbs = build_paired_dbs(records, spec, metric=metric)
    n_queries = min(args.n_queries, len(records))
    queries = [rec.vector.astype(np.float64) for rec in records[:n_queries]]
    report = bench_search(dbs, queries, args.k, repetitions=args.reps)
    log.info(
        "bench over %d records: original %.1f us, reduced %.1f us, speedup %.2fx",
        len(records), report.original_ns / 1e3, report.reduced_ns / 1e3, report.speedup,
    )
    print(json.dumps(dataclasses.asdict(report), indent=2))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="specdim",
        description=(
            "Spectral dimensionality reduction for embedding vectors: "
            "chunk text, embed, truncate amplitude spectra, and compare "
            "retrieval between the original and reduced databases."
        ),
    )
    from . import __version__

    parser.add_argument(
        "--version", action="version", version=f"%(prog)s {__version__}"
    )
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("chunk", help="split a text file into token-bounded chunks")
    p.add_argument("--in", dest="infile", required=True, help="input text file")
    p.add_argument("--max-tokens", type=int, default=128, help="token budget per chunk")
    p.add_argument(
        "--splitter", default="nl",
        help="unit delimiter: 'nl' for newline, otherwise used literally",
    )
    p.add_argument("--source-id", default=None, help="doc_key prefix (default: file stem)")
    p.add_argument("--out", required=True, help="output chunks JSONL")
    p.set_defaults(func=_cmd_chunk)

    p = sub.add_parser("mock-embed", help="embed chunks with the deterministic mock embedder")
    p.add_argument("--in", dest="infile", required=True, help="input chunks JSONL")
    p.add_argument("--dim", type=int, default=768, help="embedding dimension")
    p.add_argument("--seed", type=int, required=True, help="mock embedder seed")
    p.add_argument("--out", required=True, help="output embeddings (.bin or .jsonl)")
    p.set_defaults(func=_cmd_mock_embed)

    p = sub.add_parser("transform", help="truncate amplitude spectra of stored embeddings")
    p.add_argument("--in", dest="infile", required=True, help="input embeddings file")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--factor", type=float, help="reduction factor (target = floor(dim/factor))")
    group.add_argument("--target-dim", type=int, help="explicit target dimension")
    p.add_argument("--out", required=True, help="output embeddings (.bin or .jsonl)")
    p.set_defaults(func=_cmd_transform)

    p = sub.add_parser("index", help="build a searchable index from an embeddings file")
    p.add_argument("--in", dest="infile", required=True, help="input embeddings file")
    p.add_argument("--metric", choices=[m.value for m in Metric], default="l2")
    p.add_argument(
        "--kind", choices=["original", "transformed"], default="original",
        help="mark the index as raw embeddings or truncated spectra",
    )
    p.add_argument(
        "--source-dim", type=int, default=None,
        help="original dimension behind a transformed index",
    )
    p.add_argument("--out", required=True, help="output index file")
    p.set_defaults(func=_cmd_index)

    p = sub.add_parser("query", help="search an index, one tab-separated hit per line")
    p.add_argument("--index", required=True, help="index file to search")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--query-vec", help="embedding file (first record) or JSON array")
    group.add_argument("--query-text", help="text for the mock embedder (needs --seed)")
    p.add_argument("--k", type=int, default=4, help="number of hits")
    p.add_argument("--seed", type=int, default=None, help="mock embedder seed")
    p.add_argument("--dim", type=int, default=None, help="mock embedding dimension")
    p.add_argument(
        "--transform-factor", type=float, default=None,
        help="truncate the query's amplitude spectrum by this factor first",
    )
    p.set_defaults(func=_cmd_query)

    p = sub.add_parser("compare", help="score reduced-database retrieval against the original")
    p.add_argument("--emb", required=True, help="embeddings file for both databases")
    p.add_argument("--factor", type=float, required=True, help="reduction factor")
    p.add_argument("--k", type=int, default=10, help="hits per query")
    p.add_argument(
        "--queries", required=True,
        help="queries JSONL; lines carry 'vector' or 'text' (text needs --seed)",
    )
    p.add_argument("--metric", choices=[m.value for m in Metric], default="l2")
    p.add_argument("--seed", type=int, default=None, help="mock embedder seed for text queries")
    p.add_argument("--report", required=True, help="output report JSON")
    p.add_argument(
        "--chart", default=None,
        help="agreement chart file (default: report path with .svg suffix)",
    )
    p.add_argument("--no-chart", action="store_true", help="skip the chart")
    p.set_defaults(func=_cmd_compare)

    p = sub.add_parser("project", help="project embeddings to 2-D coordinates via MDS")
    p.add_argument("--emb", required=True, help="embeddings file to project")
    p.add_argument("--metric", choices=[m.value for m in Metric], default="l2")
    p.add_argument("--seed", type=int, required=True, help="MDS and mock embedder seed")
    group = p.add_mutually_exclusive_group()
    group.add_argument("--query-vec", help="include a query point from this file")
    group.add_argument("--query-text", help="include a mock-embedded query point")
    p.add_argument("--max-iter", type=int, default=300, help="SMACOF iteration cap")
    p.add_argument("--restarts", type=int, default=2, help="random restarts, best kept")
    p.add_argument("--out", required=True, help="output coordinates CSV")
    p.add_argument("--svg", default=None, help="optional scatter figure (.svg or .png)")
    p.set_defaults(func=_cmd_project)

    p = sub.add_parser("bench", help="time searches against both databases")
    p.add_argument("--emb", required=True, help="embeddings file for both databases")
    p.add_argument("--factor", type=float, required=True, help="reduction factor")
    p.add_argument("--k", type=int, default=10, help="hits per query")
    p.add_argument("--reps", type=int, default=5, help="timed repetitions (first extra run warms up)")
    p.add_argument("--metric", choices=[m.value for m in Metric], default="l2")
    p.add_argument(
        "--n-queries", type=int, default=100,
        help="how many stored vectors to reuse as queries",
    )
    p.set_defaults(func=_cmd_bench)

    return parser


def main(argv=None) -> int:
    logging.basicConfig(
        stream=sys.stderr, level=logging.INFO, format="%(levelname)s: %(message)s"
    )
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except FormatError as exc:
        log.error("%s", exc)
        return 2
    except SpecdimError as exc:
        log.error("%s", exc)
        return 1
    except OSError as exc:
        log.error("%s", exc)
        return 2


if __name__ == "__main__":
    sys.exit(main())
