"""Exception types raised across score-geometry.

Every class derives from a builtin so callers can catch ``ValueError`` or
``RuntimeError`` without importing this module.
"""

from typing import Any, Optional


class DimensionError(ValueError):
    """Shape or dimension mismatch."""


class SymmetryError(ValueError):
    """Matrix is not symmetric within tolerance."""


class NotUnitError(ValueError):
    """Vector is required to have unit norm."""


class NotOrthogonalError(ValueError):
    """Matrix is required to be orthogonal."""


class BasisSizeError(ValueError):
    """Size not supported by the requested basis kind."""


class PreconditionError(ValueError):
    """A documented precondition of an operation does not hold."""


class ConfigError(ValueError):
    """Invalid experiment configuration."""


class IdxFormatError(ValueError):
    """Malformed IDX file."""


class ConvergenceError(RuntimeError):
    """Iterative solver hit its iteration cap."""


class EstimationError(RuntimeError):
    """Monte Carlo estimate could not be trusted."""


class DivergenceError(RuntimeError):
    """Training or sampling produced non-finite or exploding values."""

    def __init__(
        self,
        message: str,
        trace: Any = None,
        sigma: Optional[float] = None,
        index: Optional[int] = None,
        step: Optional[int] = None,
    ):
        super().__init__(message)
        self.trace = trace
        self.sigma = sigma
        self.index = index
        self.step = step
