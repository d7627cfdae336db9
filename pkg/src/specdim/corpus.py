"""Text chunking, a deterministic mock embedder, and embedding file IO.

Chunking splits a source text on a configurable delimiter (newline by
default) and greedily packs consecutive units into chunks of at most
``max_tokens`` whitespace tokens. A single unit longer than the budget is
kept whole and flagged as oversized rather than being cut mid-unit.

The mock embedder maps text to a unit-norm vector with no model: every
lowercase whitespace token is hashed with a seeded 64-bit hash, the hash
seeds a PRNG that draws a unit-norm Gaussian direction for the token, and
the embedding is the normalized sum of token directions. Texts that share
tokens land nearby in cosine distance; texts with disjoint vocabularies
are near-orthogonal in expectation.

Two embedding file formats are supported:

* ``jsonl``: one object per line with fields ``id`` (integer),
  ``doc_key`` (string), ``snippet`` (string, optional) and ``vector``
  (array of numbers). Unknown fields are ignored on read. Vector values
  are serialized so that 32-bit floats round-trip exactly.
* ``bin``: magic "SEMB" | version u16 LE | dim u32 LE | count u64 LE |
  per record: id u64 LE, doc_key len u16 + UTF-8, snippet len u16 +
  UTF-8, dim x f32 LE | trailing CRC32 LE.

Chunk files use a similar JSONL layout with fields ``id``, ``doc_key``,
``text``, ``token_count`` and ``oversized``.
"""

from __future__ import annotations

import hashlib
import json
import struct
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

import numpy as np

from . import _binio
from .errors import ParseError, ValidationError
from .store import EmbeddingRecord

EMBEDDING_MAGIC = b"SEMB"
EMBEDDING_VERSION = 1

SNIPPET_CHARS = 120


@dataclass(frozen=True)
class ChunkingConfig:
    """Chunk budget in whitespace tokens plus the unit delimiter."""

    max_tokens: int = 128
    splitter: str = "\n"

    def __post_init__(self) -> None:
        if self.max_tokens < 1:
            raise ValidationError(f"max_tokens must be >= 1, got {self.max_tokens}")
        if self.splitter == "":
            raise ValidationError("splitter must be a non-empty string")


@dataclass(frozen=True)
class Chunk:
    doc_key: str
    text: str
    token_count: int
    oversized: bool = False


def chunk_text(source: str, config: ChunkingConfig, source_id: str = "doc") -> list[Chunk]:
    """Split a text into delimiter-aligned chunks of bounded token count.

    Chunk boundaries only ever fall on splitter positions. Units with no
    whitespace tokens are dropped; joining the chunk texts back with the
    splitter reproduces the remaining units in order.
    """
    units = [u for u in source.split(config.splitter) if u.split()]
    chunks: list[Chunk] = []

    def close(parts: list[str], oversized: bool = False) -> None:
        text = config.splitter.join(parts)
        chunks.append(
            Chunk(
                doc_key=f"{source_id}:{len(chunks)}",
                text=text,
                token_count=len(text.split()),
                oversized=oversized,
            )
        )

    pending: list[str] = []
    pending_tokens = 0
    for unit in units:
        n_tokens = len(unit.split())
        if n_tokens > config.max_tokens:
            if pending:
                close(pending)
                pending, pending_tokens = [], 0
            close([unit], oversized=True)
            continue
        if pending and pending_tokens + n_tokens > config.max_tokens:
            close(pending)
            pending, pending_tokens = [], 0
        pending.append(unit)
        pending_tokens += n_tokens
    if pending:
        close(pending)
    return chunks


@lru_cache(maxsize=4096)
def _token_direction(token: str, dim: int, seed: int) -> np.ndarray:
    digest = hashlib.blake2b(
        token.encode("utf-8"),
        digest_size=8,
        key=seed.to_bytes(8, "little", signed=True),
    ).digest()
    rng = np.random.default_rng(int.from_bytes(digest, "little"))
    v = rng.standard_normal(dim)
    v /= np.linalg.norm(v)
    v.flags.writeable = False
    return v


def mock_embed(text: str, dim: int, seed: int) -> np.ndarray:
    """Deterministic model-free text embedding with unit L2 norm."""
    if dim < 1:
        raise ValidationError(f"dim must be >= 1, got {dim}")
    tokens = text.lower().split()
    if not tokens:
        raise ValidationError("cannot embed empty or whitespace-only text")
    acc = np.zeros(dim, dtype=np.float64)
    for token in tokens:
        acc += _token_direction(token, dim, seed)
    norm = np.linalg.norm(acc)
    if norm == 0.0:
        raise ValidationError("token directions cancelled to a zero vector")
    return acc / norm


def write_chunks(chunks, path) -> None:
    lines = []
    for i, chunk in enumerate(chunks):
        lines.append(
            json.dumps(
                {
                    "id": i,
                    "doc_key": chunk.doc_key,
                    "text": chunk.text,
                    "token_count": chunk.token_count,
                    "oversized": chunk.oversized,
                },
                ensure_ascii=False,
            )
        )
    Path(path).write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")


def read_chunks(path) -> list[tuple[int, Chunk]]:
    """Read a chunk JSONL file as (id, Chunk) pairs."""
    out: list[tuple[int, Chunk]] = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"{path}: line {lineno}: invalid JSON ({exc})") from exc
            if "text" not in obj or "doc_key" not in obj:
                raise ParseError(f"{path}: line {lineno}: missing 'text' or 'doc_key'")
            text = obj["text"]
            chunk = Chunk(
                doc_key=obj["doc_key"],
                text=text,
                token_count=obj.get("token_count", len(text.split())),
                oversized=bool(obj.get("oversized", False)),
            )
            out.append((int(obj.get("id", lineno - 1)), chunk))
    return out


def _float_for_json(value: np.float32) -> float:
    # float(np.float32) is the exact float64 for that f32 value; its JSON
    # decimal form round-trips back to the identical 32-bit pattern.
    return float(value)


def write_embeddings(records, path, format: str = "bin") -> None:
    """Write EmbeddingRecords to a jsonl or bin file."""
    records = list(records)
    if not records:
        raise ValidationError("refusing to write an empty embedding file")
    dim = records[0].vector.size
    for rec in records:
        if rec.vector.size != dim:
            raise ValidationError(
                f"record {rec.id} has dimension {rec.vector.size}, expected {dim}"
            )
    if format == "jsonl":
        lines = []
        for rec in records:
            obj = {
                "id": rec.id,
                "doc_key": rec.doc_key,
                "vector": [_float_for_json(v) for v in rec.vector],
            }
            if rec.snippet is not None:
                obj["snippet"] = rec.snippet
            lines.append(json.dumps(obj, ensure_ascii=False))
        Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
    elif format == "bin":
        parts = [
            EMBEDDING_MAGIC,
            struct.pack("<H", EMBEDDING_VERSION),
            struct.pack("<I", dim),
            struct.pack("<Q", len(records)),
        ]
        for rec in records:
            parts.append(_binio.pack_record(rec.id, rec.doc_key, rec.snippet, rec.vector))
        Path(path).write_bytes(_binio.append_crc(b"".join(parts)))
    else:
        raise ValidationError(f"unknown embedding format {format!r}; use 'jsonl' or 'bin'")


def _read_embeddings_jsonl(path) -> list[EmbeddingRecord]:
    records: list[EmbeddingRecord] = []
    dim: int | None = None
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"{path}: line {lineno}: invalid JSON ({exc})") from exc
            for field in ("id", "doc_key", "vector"):
                if field not in obj:
                    raise ParseError(f"{path}: line {lineno}: missing {field!r} field")
            vector = np.asarray(obj["vector"], dtype=np.float32)
            if dim is None:
                dim = vector.size
            elif vector.size != dim:
                raise ParseError(
                    f"{path}: line {lineno}: vector length {vector.size} "
                    f"does not match earlier length {dim}"
                )
            records.append(
                EmbeddingRecord(
                    id=int(obj["id"]),
                    doc_key=str(obj["doc_key"]),
                    vector=vector,
                    snippet=obj.get("snippet"),
                )
            )
    return records


def _read_embeddings_bin(path) -> list[EmbeddingRecord]:
    reader = _binio.Reader(Path(path).read_bytes(), source=str(path))
    _binio.check_magic(reader, EMBEDDING_MAGIC)
    _binio.check_version(reader, EMBEDDING_VERSION)
    dim = reader.u32()
    count = reader.u64()
    records = []
    for _ in range(count):
        rec_id = reader.u64()
        doc_key = reader.string16()
        snippet = reader.string16()
        vector = reader.f32_vector(dim)
        records.append(
            EmbeddingRecord(
                id=rec_id, doc_key=doc_key, vector=vector, snippet=snippet or None
            )
        )
    _binio.finish(reader)
    return records


def read_embeddings(path, format: str | None = None) -> list[EmbeddingRecord]:
    """Read an embedding file; format inferred from the suffix when omitted."""
    if format is None:
        format = "jsonl" if str(path).endswith(".jsonl") else "bin"
    if format == "jsonl":
        return _read_embeddings_jsonl(path)
    if format == "bin":
        return _read_embeddings_bin(path)
    raise ValidationError(f"unknown embedding format {format!r}; use 'jsonl' or 'bin'")
