"""embed-export: real sentence-embedding vectors for chunked corpora."""

from embed_export.exporter import (
    DEFAULT_MODEL,
    FORMATS,
    ChunkFileError,
    ChunkRow,
    ExportError,
    ExportJob,
    ExportSummary,
    ModelError,
    export,
    load_model_encoder,
    main,
    read_chunk_rows,
)

__all__ = [
    "DEFAULT_MODEL",
    "FORMATS",
    "ChunkFileError",
    "ChunkRow",
    "ExportError",
    "ExportJob",
    "ExportSummary",
    "ModelError",
    "export",
    "load_model_encoder",
    "main",
    "read_chunk_rows",
]
