"""Exception hierarchy used across the toolkit.

Most errors double as ValueError so callers that do not care about the
fine-grained category can catch the builtin. ``DataFormatError`` subtypes
mark problems with on-disk data and map to a dedicated CLI exit code.
"""


class KbitqError(Exception):
    """Base class for all kbitq errors."""


class PrecisionRangeError(KbitqError, ValueError):
    """Requested bit width is outside the supported range."""


class InvalidSpecError(KbitqError, ValueError):
    """A data-type or quantization spec violates its invariants."""


class EmptyInputError(KbitqError, ValueError):
    """An operation received an empty sequence where data is required."""


class InvalidValueError(KbitqError, ValueError):
    """An input value is non-finite or otherwise unusable."""


class InvalidFractionError(KbitqError, ValueError):
    """An outlier fraction is outside [0, 1)."""


class InvalidIndexError(KbitqError, IndexError):
    """An index set refers to dimensions that do not exist."""


class DimensionError(KbitqError, ValueError):
    """Array shapes do not line up."""


class UndefinedCorrelationError(KbitqError, ValueError):
    """Correlation requested for a constant sequence."""


class InsufficientDataError(KbitqError, ValueError):
    """Not enough distinct observations to fit a curve."""


class OutOfRangeError(KbitqError, ValueError):
    """A query point lies outside every fitted range."""


class DisjointDomainError(KbitqError, ValueError):
    """Curves share no common abscissa range."""


class DataFormatError(KbitqError):
    """Base class for malformed on-disk data."""


class ParseError(DataFormatError):
    """A header or record could not be parsed."""


class LengthError(DataFormatError):
    """A file or section is shorter than its declared size."""


class FormatError(DataFormatError):
    """A file does not carry the expected magic/format marker."""


class CorruptDataError(DataFormatError):
    """Structurally valid framing with inconsistent contents."""
