"""
Error Types Module

This module defines the exceptions raised by the harmonic analysis package.
Input problems derive from ValueError and numerical failures from RuntimeError,
so callers can catch either the specific class or the builtin family.
"""

from typing import Optional


class DunklError(Exception):
    """Base class for all package errors."""


class NotARootSystem(DunklError, ValueError):
    """Raised when a root set is not closed under its own reflections."""


class GroupExplosion(DunklError, RuntimeError):
    """Raised when the generated reflection group exceeds the size cap."""


class DimensionMismatch(DunklError, ValueError):
    """Raised when vectors, polynomials or grids disagree on dimension."""


class UnsupportedRootSystem(DunklError, ValueError):
    """Raised when an operation needs a root system shape it cannot handle."""


class PoleAtB(DunklError, ValueError):
    """Raised when 1F1 is evaluated at a nonpositive integer b."""


class GammaOverflow(DunklError, OverflowError):
    """Raised when Gamma(x) does not fit in a double."""


class NotConverged(DunklError, RuntimeError):
    """
    Raised when an iterative evaluation or quadrature does not reach tolerance.

    The best available estimate and its error bound are attached.
    """

    def __init__(self, message: str, estimate: Optional[object] = None,
                 error: Optional[float] = None):
        super().__init__(message)
        self.estimate = estimate
        self.error = error


class QuadratureNotConverged(NotConverged):
    """Raised when two quadrature refinement levels disagree."""


class TruncationTooLarge(DunklError, RuntimeError):
    """Raised when a truncated kernel series has a tail above tolerance."""

    def __init__(self, message: str, tail: float = float("nan")):
        super().__init__(message)
        self.tail = tail


class GridTooSmall(DunklError, ValueError):
    """Raised when a grid has too few points for a stencil or aperture."""


class GridTooCoarse(DunklError, ValueError):
    """Raised when a grid does not resolve the ball of an atom."""


class BoundaryMassError(DunklError, ValueError):
    """Raised when a function does not decay at the grid boundary."""


class TailTooLarge(DunklError, RuntimeError):
    """Raised when a truncated time integral has too large a tail estimate."""


class AllPointsDegenerate(DunklError, RuntimeError):
    """Raised when |F| is below threshold at every tested point."""


class LadderTooShort(DunklError, ValueError):
    """Raised when tents reach beyond the available time ladder."""


class ConfigInvalid(DunklError, ValueError):
    """Raised when an experiment config violates the schema."""

    def __init__(self, message: str, path: str = "$"):
        super().__init__(message)
        self.path = path


class CheckFailed(DunklError, AssertionError):
    """Raised when a named acceptance check does not pass."""

    def __init__(self, message: str, check: str = ""):
        super().__init__(message)
        self.check = check
