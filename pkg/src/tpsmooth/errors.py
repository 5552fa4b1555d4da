"""Exception hierarchy shared across the toolkit.

Each error class maps to one CLI exit code family: configuration problems
exit 2, file/format problems exit 3, temporal sequencing problems exit 4.
"""

from __future__ import annotations


class ToolError(Exception):
    """Base class for all errors raised by this package."""


class InvalidInputError(ToolError):
    """In-memory data violates a contract (shape mismatch, NaN, bad range)."""


class ConfigError(ToolError):
    """A parameter or spec value is outside its allowed domain."""


class SceneError(ConfigError):
    """A synthetic scene spec is unrealizable (shape leaves the frame)."""


class SequencingError(ToolError):
    """The temporal recursion was driven out of order."""


class UndefinedTestError(ToolError):
    """A statistical test has no defined value (e.g. all paired differences zero)."""

    def __init__(self, message: str, n_effective: int = 0):
        super().__init__(message)
        self.n_effective = n_effective


class FormatError(ToolError):
    """A file does not conform to its on-disk format.

    ``offset`` is the byte offset at which the problem was detected,
    ``path`` the offending file when known.
    """

    def __init__(self, message: str, offset: int | None = None, path: str | None = None):
        detail = message
        if path is not None:
            detail = f"{path}: {detail}"
        if offset is not None:
            detail = f"{detail} (byte offset {offset})"
        super().__init__(detail)
        self.offset = offset
        self.path = path


class BadMagicError(FormatError):
    """Leading magic bytes do not identify the expected format."""


class VersionMismatchError(FormatError):
    """The container version is not supported."""


class TruncatedFileError(FormatError):
    """The file ends before its declared payload."""


class ValueRangeError(FormatError):
    """A stored value is outside the range the format allows."""


class HeaderError(FormatError):
    """A textual header could not be parsed."""


class UnsupportedFormatError(FormatError):
    """The file is well-formed but uses an unsupported variant."""


class SchemaError(FormatError):
    """A CSV/JSON document is missing required fields."""
