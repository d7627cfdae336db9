"""Little-endian framing helpers shared by the index and embedding file formats.

Both formats follow the same scheme: magic bytes, a u16 version, a typed
header, length-prefixed UTF-8 strings, f32 vector payloads, and a trailing
CRC32 of everything before it.
"""

from __future__ import annotations

import struct
import zlib

import numpy as np

from .errors import (
    ChecksumMismatchError,
    FormatError,
    MagicMismatchError,
    TruncatedFileError,
    ValidationError,
    VersionMismatchError,
)


class Reader:
    """Walks a byte buffer, raising TruncatedFileError when it runs dry."""

    def __init__(self, data: bytes, source: str):
        self.data = data
        self.source = source
        self.pos = 0

    def take(self, n: int) -> bytes:
        end = self.pos + n
        if end > len(self.data):
            raise TruncatedFileError(
                f"{self.source}: needed {n} bytes at offset {self.pos}, "
                f"file ends at {len(self.data)}"
            )
        chunk = self.data[self.pos:end]
        self.pos = end
        return chunk

    def u8(self) -> int:
        return self.take(1)[0]

    def u16(self) -> int:
        return struct.unpack("<H", self.take(2))[0]

    def u32(self) -> int:
        return struct.unpack("<I", self.take(4))[0]

    def u64(self) -> int:
        return struct.unpack("<Q", self.take(8))[0]

    def string16(self) -> str:
        length = self.u16()
        return self.take(length).decode("utf-8")

    def f32_vector(self, dim: int) -> np.ndarray:
        raw = self.take(dim * 4)
        return np.frombuffer(raw, dtype="<f4", count=dim).copy()


def check_magic(reader: Reader, magic: bytes) -> None:
    got = reader.take(len(magic))
    if got != magic:
        raise MagicMismatchError(
            f"{reader.source}: expected magic {magic!r}, found {got!r}"
        )


def check_version(reader: Reader, expected: int) -> None:
    got = reader.u16()
    if got != expected:
        raise VersionMismatchError(
            f"{reader.source}: unsupported format version {got}, expected {expected}"
        )


def finish(reader: Reader) -> None:
    """Verify the trailing CRC32 and that nothing follows it."""
    remaining = len(reader.data) - reader.pos
    if remaining < 4:
        raise TruncatedFileError(
            f"{reader.source}: missing trailing checksum ({remaining} bytes left)"
        )
    if remaining > 4:
        raise FormatError(
            f"{reader.source}: {remaining - 4} unexpected bytes after the last record"
        )
    stored = struct.unpack("<I", reader.take(4))[0]
    actual = zlib.crc32(reader.data[:-4]) & 0xFFFFFFFF
    if stored != actual:
        raise ChecksumMismatchError(
            f"{reader.source}: checksum {stored:#010x} does not match contents "
            f"{actual:#010x}"
        )


def pack_string16(text: str, what: str) -> bytes:
    raw = text.encode("utf-8")
    if len(raw) > 0xFFFF:
        raise ValidationError(f"{what} exceeds 65535 UTF-8 bytes")
    return struct.pack("<H", len(raw)) + raw


def pack_record(record_id: int, doc_key: str, snippet: str | None, vector: np.ndarray) -> bytes:
    if not 0 <= record_id < 2**64:
        raise ValidationError(f"record id must fit in u64, got {record_id}")
    parts = [
        struct.pack("<Q", record_id),
        pack_string16(doc_key, "doc_key"),
        pack_string16(snippet or "", "snippet"),
        np.asarray(vector, dtype="<f4").tobytes(),
    ]
    return b"".join(parts)


def append_crc(payload: bytes) -> bytes:
    return payload + struct.pack("<I", zlib.crc32(payload) & 0xFFFFFFFF)
