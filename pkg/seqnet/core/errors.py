"""
Error types raised by the engine.

Validation failures derive from ValueError and numerical failures from
ArithmeticError or RuntimeError, so callers may catch either the specific
class, the SeqnetError family, or the builtin family.
"""

from typing import Optional


class SeqnetError(Exception):
    """Base class for all engine errors."""


class InvalidSizeError(SeqnetError, ValueError):
    """Node count outside the supported range."""


class InvalidEditError(SeqnetError, ValueError):
    """A link edit with coinciding or out-of-range endpoints."""


class OccupiedLinkError(SeqnetError, ValueError):
    """Adding a link that is already present."""


class SizeLimitError(SeqnetError, ValueError):
    """Exact search requested beyond the desk-scale limits."""


class InvalidComparisonError(SeqnetError, ValueError):
    """Comparing graphs of different sizes."""


class InvalidWeightsError(SeqnetError, ValueError):
    """Node weights or weight edits with the wrong shape or sign."""


class InvalidParameterError(SeqnetError, ValueError):
    """A numeric parameter outside its validity range."""


class InvalidBudgetError(SeqnetError, ValueError):
    """Link budget outside [0, n(n-1)/2]."""


class InvalidInputError(SeqnetError, ValueError):
    """Input graph lacks a structural property the operation requires."""


class InvalidPathError(SeqnetError, ValueError):
    """Formation path violating the succession constraint."""


class InvalidScheduleError(SeqnetError, ValueError):
    """Discount schedule with invalid entries or the wrong length."""


class InvalidHorizonError(SeqnetError, ValueError):
    """Horizon of zero or beyond the link capacity."""


class InvalidBaseError(SeqnetError, ValueError):
    """Base graph unsuitable for the interpolation family."""


class NoMoveError(SeqnetError, ValueError):
    """A delegated agent is already linked to everybody."""


class SaturationError(SeqnetError, ValueError):
    """No capacity left to place one unit of weight."""


class DivergenceError(SeqnetError, ArithmeticError):
    """Series or fixed-point iteration outside its convergence region."""


class ConvergenceError(SeqnetError, RuntimeError):
    """Iteration cap reached before the tolerance was met."""


class ReproductionError(SeqnetError, RuntimeError):
    """A reproduced value disagrees with the published one."""


class ConfigError(SeqnetError, ValueError):
    """Experiment configuration that cannot be parsed or validated."""

    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
