"""Exception hierarchy shared by every module of the package."""


class RadonCDTError(Exception):
    """Base class for all package errors."""


class ParseError(RadonCDTError, ValueError):
    """A file could not be decoded (bad magic, header, or truncated payload)."""


class IoError(RadonCDTError, OSError):
    """A file could not be written."""


class DomainError(RadonCDTError, ValueError):
    """An input violates the mathematical preconditions of an operation."""


class DegenerateInput(DomainError):
    """The input carries no usable mass (e.g. an all-zero image)."""


class TemplateMismatch(RadonCDTError, ValueError):
    """A representation was produced with a different template."""


class SampleRejected(RadonCDTError):
    """A generated sample pushed too much mass off the grid."""
