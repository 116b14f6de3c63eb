"""Exception hierarchy.

Three branches matter to callers: configuration problems, data problems,
and oracle/transport problems. The CLI maps them to exit codes 1, 2 and 3.
"""


class CtxSearchError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(CtxSearchError):
    """Invalid configuration, flags, or missing configured files."""


class DataError(CtxSearchError):
    """Malformed or inconsistent data handed to a library operation."""


class FormatError(DataError):
    """A file does not conform to its declared on-disk format."""


class DimensionMismatchError(DataError):
    """Vector/matrix dimensions disagree."""


class DuplicateIdError(DataError):
    """The same sample id appears more than once."""


class NonFiniteError(DataError):
    """NaN or infinity encountered where finite values are required."""


class NormalizationError(DataError):
    """A vector cannot be normalized (near-zero norm)."""


class OracleError(CtxSearchError):
    """A reward oracle could not produce a score."""


class TransportError(OracleError):
    """A remote oracle failed at the HTTP level."""
