"""Exact flat vector index with binary persistence.

Indexes are immutable collections of same-dimension vectors searched by a
full scan, so results are exact under the chosen metric. Vectors are
stored in single precision; distances are accumulated in double precision
on float64 copies of the stored values. Ties in distance are broken by
ascending record id, making every search deterministic.

File format (all integers little-endian):

    magic "SDIM" | version u16 | kind u8 | metric u8 | dim u32 |
    record count u64 |
    [iff kind = transformed] source_dim u32, target_dim u32 |
    per record: id u64, doc_key len u16 + UTF-8, snippet len u16 + UTF-8,
                dim x f32 |
    CRC32 u32 of all preceding bytes
"""

from __future__ import annotations

import enum
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import _binio
from .errors import FormatError, ValidationError, ZeroVectorError
from .reducer import ReductionSpec

FORMAT_MAGIC = b"SDIM"
FORMAT_VERSION = 1


class Metric(enum.Enum):
    L2 = "l2"
    COSINE = "cosine"


class IndexKind(enum.Enum):
    ORIGINAL = "original"
    TRANSFORMED = "transformed"


_METRIC_CODES = {Metric.L2: 0, Metric.COSINE: 1}
_KIND_CODES = {IndexKind.ORIGINAL: 0, IndexKind.TRANSFORMED: 1}


@dataclass(frozen=True, eq=False)
class EmbeddingRecord:
    """One document chunk: id, key, dense vector, optional text snippet."""

    id: int
    doc_key: str
    vector: np.ndarray
    snippet: str | None = None

    def __post_init__(self) -> None:
        if self.id < 0:
            raise ValidationError(f"record id must be non-negative, got {self.id}")
        vec = np.asarray(self.vector, dtype=np.float32)
        if vec.ndim != 1 or vec.size == 0:
            raise ValidationError("record vector must be a non-empty 1-D array")
        if not np.all(np.isfinite(vec)):
            raise ValidationError(f"record {self.id} vector has non-finite components")
        object.__setattr__(self, "vector", vec)


@dataclass(frozen=True)
class QueryResult:
    """Top-k hits as (id, doc_key, distance), ascending by distance then id."""

    hits: tuple[tuple[int, str, float], ...]
    k: int

    @property
    def ids(self) -> list[int]:
        return [h[0] for h in self.hits]


@dataclass(frozen=True, eq=False)
class VectorIndex:
    """Immutable flat index; build through ``build_index``."""

    dim: int
    metric: Metric
    kind: IndexKind
    records: tuple[EmbeddingRecord, ...]
    reduction: ReductionSpec | None = None
    _matrix: np.ndarray = field(repr=False, default=None)
    _ids: np.ndarray = field(repr=False, default=None)

    def __len__(self) -> int:
        return len(self.records)


def build_index(
    records,
    metric: Metric = Metric.L2,
    kind: IndexKind = IndexKind.ORIGINAL,
    reduction: ReductionSpec | None = None,
) -> VectorIndex:
    """Validate records and assemble an immutable index over them.

    Requires a non-empty record list with uniform dimension and unique
    ids. A transformed index must carry the ReductionSpec that produced
    its vectors, and the index dimension must equal its target_dim. Under
    the cosine metric, zero vectors are rejected here because they have
    no direction.
    """
    records = tuple(records)
    if not records:
        raise ValidationError("cannot build an index from zero records")
    dim = records[0].vector.size
    seen: set[int] = set()
    for rec in records:
        if rec.vector.size != dim:
            raise ValidationError(
                f"record {rec.id} has dimension {rec.vector.size}, expected {dim}"
            )
        if rec.id in seen:
            raise ValidationError(f"duplicate record id {rec.id}")
        seen.add(rec.id)
    if kind is IndexKind.TRANSFORMED:
        if reduction is None:
            raise ValidationError("a transformed index requires a ReductionSpec")
        if reduction.target_dim != dim:
            raise ValidationError(
                f"transformed index dimension {dim} does not match "
                f"reduction target_dim {reduction.target_dim}"
            )
    matrix = np.stack([rec.vector for rec in records]).astype(np.float64)
    ids = np.asarray([rec.id for rec in records], dtype=np.int64)
    if metric is Metric.COSINE:
        norms = np.linalg.norm(matrix, axis=1)
        if np.any(norms == 0.0):
            bad = int(ids[np.argmax(norms == 0.0)])
            raise ZeroVectorError(
                f"record {bad} is a zero vector; undefined under the cosine metric"
            )
    return VectorIndex(
        dim=dim,
        metric=metric,
        kind=kind,
        records=records,
        reduction=reduction,
        _matrix=matrix,
        _ids=ids,
    )


def _distances(index: VectorIndex, query: np.ndarray) -> np.ndarray:
    if index.metric is Metric.L2:
        diff = index._matrix - query
        return np.sqrt(np.einsum("ij,ij->i", diff, diff))
    norms = np.linalg.norm(index._matrix, axis=1)
    qnorm = np.linalg.norm(query)
    if qnorm == 0.0:
        raise ZeroVectorError("query is a zero vector; undefined under the cosine metric")
    sims = (index._matrix @ query) / (norms * qnorm)
    return np.clip(1.0 - sims, 0.0, 2.0)


def search(index: VectorIndex, query, k: int) -> QueryResult:
    """Exact top-k scan of the index, O(size * dim) per query.

    The query is rounded to single precision first, matching the storage
    precision of the indexed vectors, then distances are accumulated in
    double precision.
    """
    q32 = np.asarray(query, dtype=np.float32)
    if q32.ndim != 1 or q32.size != index.dim:
        raise ValidationError(
            f"query dimension {q32.size} does not match index dimension {index.dim}"
        )
    if not np.all(np.isfinite(q32)):
        raise ValidationError("query contains non-finite components")
    if k < 1:
        raise ValidationError(f"k must be >= 1, got {k}")
    dists = _distances(index, q32.astype(np.float64))
    order = np.lexsort((index._ids, dists))[: min(k, len(index.records))]
    hits = tuple(
        (int(index._ids[i]), index.records[i].doc_key, float(dists[i])) for i in order
    )
    return QueryResult(hits=hits, k=k)


def save_index(index: VectorIndex, path) -> None:
    """Write the index in the SDIM binary format."""
    parts = [
        FORMAT_MAGIC,
        struct.pack("<H", FORMAT_VERSION),
        struct.pack("<B", _KIND_CODES[index.kind]),
        struct.pack("<B", _METRIC_CODES[index.metric]),
        struct.pack("<I", index.dim),
        struct.pack("<Q", len(index.records)),
    ]
    if index.kind is IndexKind.TRANSFORMED:
        parts.append(struct.pack("<II", index.reduction.source_dim, index.reduction.target_dim))
    for rec in index.records:
        parts.append(_binio.pack_record(rec.id, rec.doc_key, rec.snippet, rec.vector))
    Path(path).write_bytes(_binio.append_crc(b"".join(parts)))


def load_index(path) -> VectorIndex:
    """Read an SDIM file back into an index, validating the framing."""
    path = Path(path)
    reader = _binio.Reader(path.read_bytes(), source=str(path))
    _binio.check_magic(reader, FORMAT_MAGIC)
    _binio.check_version(reader, FORMAT_VERSION)
    kind_code = reader.u8()
    metric_code = reader.u8()
    dim = reader.u32()
    count = reader.u64()
    kinds = {v: k for k, v in _KIND_CODES.items()}
    metrics = {v: k for k, v in _METRIC_CODES.items()}
    if kind_code not in kinds:
        raise FormatError(f"{path}: unknown index kind code {kind_code}")
    if metric_code not in metrics:
        raise FormatError(f"{path}: unknown metric code {metric_code}")
    kind = kinds[kind_code]
    reduction = None
    if kind is IndexKind.TRANSFORMED:
        source_dim = reader.u32()
        target_dim = reader.u32()
        reduction = ReductionSpec(source_dim=source_dim, target_dim=target_dim)
    records = []
    for _ in range(count):
        rec_id = reader.u64()
        doc_key = reader.string16()
        snippet = reader.string16()
        vector = reader.f32_vector(dim)
        records.append(
            EmbeddingRecord(
                id=rec_id,
                doc_key=doc_key,
                vector=vector,
                snippet=snippet or None,
            )
        )
    _binio.finish(reader)
    return build_index(records, metric=metrics[metric_code], kind=kind, reduction=reduction)
