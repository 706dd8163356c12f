"""Exception hierarchy shared by the imdtm modules."""


class IMDTMError(Exception):
    """Base class for all errors raised by imdtm."""


class ShapeError(IMDTMError, ValueError):
    """Two coefficient tables do not share truncation bounds."""


class EmptyResultError(IMDTMError, ValueError):
    """An operation would produce a table with no entries."""


class DomainError(IMDTMError, ValueError):
    """A leading coefficient lies outside the real domain of a function."""


class ZeroLeadingCoefficientError(DomainError, ZeroDivisionError):
    """Division by a series whose constant term is zero."""


class TruncationError(IMDTMError, IndexError):
    """A recurrence needs a coefficient beyond the available truncation."""


class GeometryError(IMDTMError, ValueError):
    """Invalid neighbourhood geometry (duplicate offsets, no centre, ...)."""


class CapacityError(IMDTMError, ValueError):
    """Requested derivative order exceeds the interpolant capacity."""


class DegenerateConfigurationError(IMDTMError, ValueError):
    """The interpolation problem has no unique solution."""


class ConfigError(IMDTMError, ValueError):
    """Invalid run configuration."""

    def __init__(self, message, key=None, line=None):
        self.message = message
        self.key = key
        self.line = line
        where = []
        if key is not None:
            where.append(f"key {key!r}")
        if line is not None:
            where.append(f"line {line}")
        if where:
            message = f"{', '.join(where)}: {message}"
        super().__init__(message)
