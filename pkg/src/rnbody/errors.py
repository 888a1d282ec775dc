"""Exception hierarchy shared by all rnbody modules."""

from __future__ import annotations


class RNBodyError(Exception):
    """Base class for every error raised by rnbody."""


class ParameterDomainError(RNBodyError, ValueError):
    """A parameter lies outside the range the model supports."""


class SingularConfigurationError(RNBodyError):
    """Two primaries coincide, so forces between them are undefined."""


class CollisionError(RNBodyError):
    """An evaluation point is (numerically) on top of a primary."""

    def __init__(self, message: str, primary: int = -1, distance: float = 0.0):
        super().__init__(message)
        self.primary = primary
        self.distance = distance


class ConvergenceError(RNBodyError):
    """An iterative solver did not reach its tolerance."""


class QuadratureError(ConvergenceError):
    """Quadrature refinement stopped before reaching the requested accuracy."""

    def __init__(self, message: str, estimate: float):
        super().__init__(message)
        self.estimate = estimate


class SingularBlockError(RNBodyError):
    """A linearised block is singular at the requested frequency."""
