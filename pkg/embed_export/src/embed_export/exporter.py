"""Export real sentence-embedding vectors for chunked corpora.

Reads a chunks JSONL file, runs a sentence-transformers model over the
chunk texts in order-preserving batches, and writes the embedding file
formats the downstream toolchain consumes: the SEMB binary layout or
JSONL, with vectors stored as little-endian float32 either way. Record
order, ids and doc_keys mirror the input exactly; the tool never
reorders chunks.

Model download and inference live only in this tool. The downstream
toolchain stays model-free and offline; files written here load there
with ids, keys and vector bytes intact.
"""

from __future__ import annotations

import argparse
import json
import logging
import struct
import sys
import zlib
from dataclasses import dataclass
from pathlib import Path

import numpy as np

DEFAULT_MODEL = "all-mpnet-base-v2"
EMBEDDING_MAGIC = b"SEMB"
EMBEDDING_VERSION = 1
SNIPPET_CHARS = 120
FORMATS = ("bin", "jsonl")

log = logging.getLogger("embed_export")


class ExportError(Exception):
    """Base class for everything this tool raises on purpose."""


class ChunkFileError(ExportError):
    """The chunks file is missing a field or is not valid JSONL."""


class ModelError(ExportError):
    """The embedding model could not be loaded or misbehaved."""


@dataclass(frozen=True)
class ChunkRow:
    """One chunk to embed: id, doc_key, text, whitespace token count."""

    id: int
    doc_key: str
    text: str
    token_count: int


@dataclass(frozen=True)
class ExportJob:
    """Everything one export run needs, validated on construction."""

    infile: str
    out: str
    model: str = DEFAULT_MODEL
    format: str = "bin"
    batch: int = 32

    def __post_init__(self) -> None:
        if self.format not in FORMATS:
            raise ExportError(
                f"unknown output format {self.format!r}; use 'bin' or 'jsonl'"
            )
        if self.batch < 1:
            raise ExportError(f"batch size must be >= 1, got {self.batch}")


@dataclass(frozen=True)
class ExportSummary:
    """What was written: record count, dimension, token-count spread."""

    count: int
    dim: int
    token_min: int
    token_mean: float
    token_max: int

    def as_dict(self) -> dict:
        return {
            "count": self.count,
            "dim": self.dim,
            "tokens": {
                "min": self.token_min,
                "mean": self.token_mean,
                "max": self.token_max,
            },
        }


def read_chunk_rows(path) -> list[ChunkRow]:
    """Chunks from a JSONL file, one object per line, order preserved.

    Lines need 'doc_key' and 'text'; 'id' falls back to the zero-based
    line index and 'token_count' to a whitespace count of the text.
    Problems are reported with their line number.
    """
    rows: list[ChunkRow] = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ChunkFileError(
                    f"{path}: line {lineno}: invalid JSON ({exc})"
                ) from exc
            if not isinstance(obj, dict):
                raise ChunkFileError(f"{path}: line {lineno}: expected a JSON object")
            for field in ("doc_key", "text"):
                if field not in obj:
                    raise ChunkFileError(
                        f"{path}: line {lineno}: missing {field!r} field"
                    )
            text = str(obj["text"])
            rows.append(
                ChunkRow(
                    id=int(obj.get("id", lineno - 1)),
                    doc_key=str(obj["doc_key"]),
                    text=text,
                    token_count=int(obj.get("token_count", len(text.split()))),
                )
            )
    return rows


class ModelEncoder:
    """sentence-transformers adapter: a dimension and a batch encode."""

    def __init__(self, model) -> None:
        self._model = model
        self.dimension = int(model.get_sentence_embedding_dimension())

    def encode(self, texts: list[str]) -> np.ndarray:
        return self._model.encode(
            texts,
            batch_size=len(texts),
            convert_to_numpy=True,
            show_progress_bar=False,
        )


def load_model_encoder(name: str) -> ModelEncoder:
    """Load a sentence-transformers model by name, downloading if needed."""
    try:
        from sentence_transformers import SentenceTransformer
    except ImportError as exc:
        raise ModelError(
            "sentence-transformers is not installed; install it to run real models"
        ) from exc
    try:
        model = SentenceTransformer(name)
    except Exception as exc:
        raise ModelError(f"failed to load model {name!r}: {exc}") from exc
    return ModelEncoder(model)


def _encode_in_batches(encoder, texts: list[str], batch: int, dim: int) -> np.ndarray:
    vectors = np.empty((len(texts), dim), dtype=np.float32)
    for start in range(0, len(texts), batch):
        part = texts[start : start + batch]
        out = np.asarray(encoder.encode(part), dtype=np.float32)
        if out.shape != (len(part), dim):
            raise ModelError(
                f"model returned shape {out.shape} for a batch of {len(part)} "
                f"texts at dimension {dim}"
            )
        if not np.all(np.isfinite(out)):
            raise ModelError("model returned non-finite embedding components")
        vectors[start : start + len(part)] = out
    return vectors


def _pack_string16(text: str, what: str) -> bytes:
    raw = text.encode("utf-8")
    if len(raw) > 0xFFFF:
        raise ExportError(f"{what} exceeds 65535 UTF-8 bytes")
    return struct.pack("<H", len(raw)) + raw


def _write_bin(rows: list[ChunkRow], vectors: np.ndarray, dim: int, path) -> None:
    parts = [
        EMBEDDING_MAGIC,
        struct.pack("<H", EMBEDDING_VERSION),
        struct.pack("<I", dim),
        struct.pack("<Q", len(rows)),
    ]
    for row, vector in zip(rows, vectors):
        if not 0 <= row.id < 2**64:
            raise ExportError(f"record id must fit in u64, got {row.id}")
        parts.append(struct.pack("<Q", row.id))
        parts.append(_pack_string16(row.doc_key, "doc_key"))
        parts.append(_pack_string16(row.text[:SNIPPET_CHARS], "snippet"))
        parts.append(np.asarray(vector, dtype="<f4").tobytes())
    payload = b"".join(parts)
    crc = struct.pack("<I", zlib.crc32(payload) & 0xFFFFFFFF)
    Path(path).write_bytes(payload + crc)


def _write_jsonl(rows: list[ChunkRow], vectors: np.ndarray, path) -> None:
    lines = []
    for row, vector in zip(rows, vectors):
        obj = {
            "id": row.id,
            "doc_key": row.doc_key,
            # float() of a float32 is its exact float64 value; the JSON
            # decimal form round-trips back to the identical 32 bits.
            "vector": [float(v) for v in np.asarray(vector, dtype=np.float32)],
            "snippet": row.text[:SNIPPET_CHARS],
        }
        lines.append(json.dumps(obj, ensure_ascii=False))
    text = "\n".join(lines) + "\n" if lines else ""
    Path(path).write_text(text, encoding="utf-8")


def export(job: ExportJob, encoder=None) -> ExportSummary:
    """Embed every chunk in the job's input file and write the output.

    encoder defaults to the job's sentence-transformers model; anything
    with a `dimension` attribute and a batch `encode` method works. An
    empty chunks file still produces a valid zero-record output file,
    with a warning.
    """
    rows = read_chunk_rows(job.infile)
    if encoder is None:
        encoder = load_model_encoder(job.model)
    dim = int(encoder.dimension)
    if dim < 1:
        raise ModelError(f"model reports dimension {dim}")

    if not rows:
        log.warning("%s holds no chunks; writing an empty embedding file", job.infile)
        vectors = np.empty((0, dim), dtype=np.float32)
    else:
        vectors = _encode_in_batches(encoder, [r.text for r in rows], job.batch, dim)

    if job.format == "bin":
        _write_bin(rows, vectors, dim, job.out)
    else:
        _write_jsonl(rows, vectors, job.out)

    counts = [r.token_count for r in rows]
    summary = ExportSummary(
        count=len(rows),
        dim=dim,
        token_min=min(counts) if counts else 0,
        token_mean=float(sum(counts)) / len(counts) if counts else 0.0,
        token_max=max(counts) if counts else 0,
    )
    log.info(
        "exported %d chunks at dim %d to %s (%s)",
        summary.count, summary.dim, job.out, job.format,
    )
    return summary


class _Parser(argparse.ArgumentParser):
    """argparse with usage failures reported as exit code 1, not 2."""

    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="embed-export",
        description=(
            "Run a sentence-embedding model over a chunks JSONL file and "
            "write the embeddings in the downstream bin or jsonl format."
        ),
    )
    parser.add_argument(
        "--model", default=DEFAULT_MODEL,
        help=f"sentence-transformers model name (default: {DEFAULT_MODEL})",
    )
    parser.add_argument("--in", dest="infile", required=True, help="input chunks JSONL")
    parser.add_argument("--out", required=True, help="output embeddings file")
    parser.add_argument(
        "--format", choices=list(FORMATS), default="bin", help="output format"
    )
    parser.add_argument("--batch", type=int, default=32, help="inference batch size")
    return parser


def main(argv=None, encoder=None) -> int:
    logging.basicConfig(
        stream=sys.stderr, level=logging.INFO, format="%(levelname)s: %(message)s"
    )
    args = build_parser().parse_args(argv)
    try:
        job = ExportJob(
            infile=args.infile,
            out=args.out,
            model=args.model,
            format=args.format,
            batch=args.batch,
        )
        summary = export(job, encoder=encoder)
    except ChunkFileError as exc:
        log.error("%s", exc)
        return 2
    except ExportError as exc:
        log.error("%s", exc)
        return 1
    except OSError as exc:
        log.error("%s", exc)
        return 2
    print(json.dumps(summary.as_dict()))
    return 0


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
