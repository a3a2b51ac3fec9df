"""Exception types raised across the package."""

from __future__ import annotations


class GsmError(Exception):
    """Base class for all package errors."""


class InvalidParameter(GsmError, ValueError):
    """A parameter lies outside its admissible domain."""


class MomentUndefined(GsmError, ArithmeticError):
    """The requested moment of the mixture is infinite."""


class QuadratureFailure(GsmError, ArithmeticError):
    """Numerical integration could not reach the requested tolerance."""


class EmptySample(GsmError, ValueError):
    pass


class TooFewSamples(GsmError, ValueError):
    pass


class TooSmallImage(GsmError, ValueError):
    pass


class KernelLargerThanImage(GsmError, ValueError):
    pass


class DegeneratePartition(GsmError, ValueError):
    pass


class PlanMismatch(GsmError, ValueError):
    """Transform outputs do not agree with the grouping plan."""


class OverTrimmed(GsmError, ValueError):
    pass


class AllFitsDegenerate(GsmError, RuntimeError):
    pass


class TooFewObservations(GsmError, ValueError):
    def __init__(self, message: str, groups: list[str] | None = None):
        super().__init__(message)
        self.groups = list(groups or [])


class ZeroTrace(GsmError, ValueError):
    pass


class EigenFailure(GsmError, ArithmeticError):
    pass


class BlockFormatError(GsmError, ValueError):
    """A binary block or table file is malformed."""
