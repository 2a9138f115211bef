"""
Exception hierarchy for the cluster expansion library.

Library code raises these; commands turn them into failed results and the
runner maps them onto exit codes.
"""

from typing import Optional


class ClusterError(Exception):
    """Base class for every error raised by the library."""


class CapacityError(ClusterError):
    """An enumeration or exact sum was requested beyond its implementation cap."""

    def __init__(self, what: str, requested: int, cap: int):
        self.what = what
        self.requested = requested
        self.cap = cap
        super().__init__(f"{what}: requested {requested} exceeds cap {cap}")


class ModelFileError(ClusterError):
    """A model, weight or parameter file could not be parsed or validated."""

    def __init__(
        self,
        message: str,
        path: Optional[str] = None,
        line: Optional[int] = None,
        column: Optional[int] = None,
        location: Optional[str] = None,
    ):
        self.path = path
        self.line = line
        self.column = column
        self.location = location
        where = path or "<input>"
        if line is not None:
            where = f"{where}:{line}:{column}"
        elif location:
            where = f"{where} at {location}"
        super().__init__(f"{where}: {message}")


class QuadratureError(ClusterError):
    """Two quadrature orders disagree beyond tolerance."""


class PreconditionError(ClusterError):
    """An operation was invoked outside its precondition."""


class BracketError(ClusterError):
    """Root bracketing failed after expansion."""


class TreeIdentityError(ClusterError):
    """An interpolation weight met a chain with a zero crossing count."""
