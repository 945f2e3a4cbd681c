"""Exception types shared across the toolkit."""


class TagforgeError(Exception):
    """Base class for data and validation errors (CLI exit code 2)."""


class MalformedHeaderError(TagforgeError):
    """Vector file header line is not of the expected form."""


class DimensionMismatchError(TagforgeError):
    """Declared and actual dimensions disagree."""


class TruncatedPayloadError(TagforgeError):
    """File ends before the declared number of records."""
