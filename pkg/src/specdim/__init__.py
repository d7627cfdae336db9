"""Spectral dimensionality reduction for embedding vectors.

An embedding is Fourier-transformed, its amplitude spectrum is cut down
to the leading components, and the shortened vector stands in for the
original during similarity search. The package provides the transform,
paired original/reduced vector databases with exact search, a
comparison and timing harness, and a 2-D MDS projection for figures.

The plotting module is imported on demand; everything else re-exports
here.
"""

from .corpus import (
    Chunk,
    ChunkingConfig,
    chunk_text,
    mock_embed,
    read_chunks,
    read_embeddings,
    write_chunks,
    write_embeddings,
)
from .errors import (
    ChecksumMismatchError,
    FormatError,
    MagicMismatchError,
    ParseError,
    SpecdimError,
    TruncatedFileError,
    ValidationError,
    VersionMismatchError,
    ZeroVectorError,
)
from .evalcmp import (
    BenchReport,
    RetrievalComparison,
    TopicPurityReport,
    bench_search,
    build_paired_dbs,
    compare_queries,
    compare_query,
    comparison_report,
    render_comparison_table,
    synthetic_query,
    synthetic_topic_corpus,
    thread_cap,
    topic_purity,
)
from .mds import MdsResult, mds_project, pairwise_distances
from .reducer import (
    ReductionSpec,
    SpectrumVector,
    make_spec,
    reduce,
    transform_embedding,
)
from .spectral import amplitude_spectrum, dft_direct, fft_forward
from .store import (
    EmbeddingRecord,
    IndexKind,
    Metric,
    QueryResult,
    VectorIndex,
    build_index,
    load_index,
    save_index,
    search,
)

__version__ = "0.1.0"

__all__ = [
    "BenchReport",
    "Chunk",
    "ChunkingConfig",
    "ChecksumMismatchError",
    "EmbeddingRecord",
    "FormatError",
    "IndexKind",
    "MagicMismatchError",
    "MdsResult",
    "Metric",
    "ParseError",
    "QueryResult",
    "ReductionSpec",
    "RetrievalComparison",
    "SpecdimError",
    "SpectrumVector",
    "TopicPurityReport",
    "TruncatedFileError",
    "ValidationError",
    "VectorIndex",
    "VersionMismatchError",
    "ZeroVectorError",
    "amplitude_spectrum",
    "bench_search",
    "build_index",
    "build_paired_dbs",
    "chunk_text",
    "compare_queries",
    "compare_query",
    "comparison_report",
    "dft_direct",
    "fft_forward",
    "load_index",
    "make_spec",
    "mds_project",
    "mock_embed",
    "pairwise_distances",
    "read_chunks",
    "read_embeddings",
    "reduce",
    "render_comparison_table",
    "save_index",
    "search",
    "synthetic_query",
    "synthetic_topic_corpus",
    "thread_cap",
    "topic_purity",
    "transform_embedding",
    "write_chunks",
    "write_embeddings",
]
