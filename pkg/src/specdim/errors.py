"""Exception hierarchy shared across the package.

Two broad families matter to callers: validation problems (bad arguments,
dimension mismatches, invalid values) and file-format problems (bad magic,
wrong version, truncation, checksum failures, malformed records). The CLI
maps the first family to exit code 1 and the second to exit code 2.
"""


class SpecdimError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(SpecdimError, ValueError):
    """Invalid argument or value, for example an empty input or a dimension mismatch."""


class ZeroVectorError(ValidationError):
    """A zero vector was supplied where the cosine metric needs a direction."""


class FormatError(SpecdimError, IOError):
    """Base class for persistent-file format problems."""


class MagicMismatchError(FormatError):
    """File does not start with the expected magic bytes."""


class VersionMismatchError(FormatError):
    """File carries an unsupported format version."""


class TruncatedFileError(FormatError):
    """File ended before a complete structure could be read."""


class ChecksumMismatchError(FormatError):
    """Trailing CRC32 does not match the file contents."""


class ParseError(FormatError):
    """A text record (JSONL line) could not be parsed."""
