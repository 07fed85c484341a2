"""
WCT Lab Exceptions
"""


class WctLabError(Exception):
    """Base class for every error raised by the lab."""


class DimensionMismatchError(WctLabError, ValueError):
    """A function or matrix does not match the atom count of its space."""


class ScenarioFormatError(WctLabError, ValueError):
    """A scenario or matrix file could not be parsed."""


class PreconditionError(WctLabError, ValueError):
    """An operation was called outside its documented precondition."""
