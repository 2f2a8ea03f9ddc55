"""Exception classes shared across the package.

Each class maps to a distinct process exit code in the CLI, so error kinds
must stay disjoint: file-format problems, shape mismatches, bad values,
too little data, and empty-index queries are different failures.
"""


class RsirError(Exception):
    """Base class for all errors raised by this package."""


class FormatError(RsirError):
    """A file is corrupt, truncated, or not in the expected binary format."""


class DimensionError(RsirError):
    """Vector or matrix dimensions do not match what an operation expects."""


class DataError(RsirError):
    """Input values are invalid: non-finite entries, duplicate ids, bad ranges."""


class InsufficientDataError(RsirError):
    """Too few samples for the requested operation (e.g. fewer points than k)."""


class EmptyIndexError(RsirError):
    """A search was issued against an index with no entries."""


class EvaluationError(RsirError):
    """An evaluation precondition failed (e.g. ranked list shorter than N)."""
