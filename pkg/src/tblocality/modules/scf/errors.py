"""Exceptions raised by the self-consistency solver."""

from __future__ import annotations

__all__ = [
    "ConvergenceError",
    "ScfError",
    "StabilityError",
]


class ScfError(Exception):
    """Base class for self-consistency failures."""


class ConvergenceError(ScfError):
    """Raised when the fixed-point iteration does not reach its tolerance.

    Attributes:
        residual: Last residual ‖ρ - F(ρ)‖_∞.
        iterations: Iterations performed.
        trace: (iteration, residual) history.
    """

    def __init__(
        self,
        message: str,
        *,
        residual: float,
        iterations: int,
        trace: tuple[tuple[int, float], ...] = (),
    ) -> None:
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations
        self.trace = trace


class StabilityError(ScfError):
    """Raised when I - 𝓛 is singular, so the density response is undefined."""

    def __init__(self, message: str, *, margin: float) -> None:
        super().__init__(message)
        self.margin = margin
