"""Exceptions raised by the spectral calculus."""

from __future__ import annotations

__all__ = [
    "ContourError",
    "DomainError",
    "GapError",
    "NearSingularError",
    "NumericalError",
    "QuadratureError",
    "SpectralError",
]


class SpectralError(Exception):
    """Base class for spectral failures."""


class NumericalError(SpectralError):
    """Raised for non-finite input or failed accuracy checks."""


class DomainError(SpectralError):
    """Raised when a function is evaluated at one of its poles."""


class GapError(SpectralError):
    """Raised when a zero-temperature quantity needs a gap at μ and there is none."""

    def __init__(self, message: str, *, gap: float, mu: float) -> None:
        super().__init__(message)
        self.gap = gap
        self.mu = mu


class ContourError(SpectralError):
    """Raised when a contour passes too close to the spectrum."""

    def __init__(self, message: str, *, clearance: float) -> None:
        super().__init__(message)
        self.clearance = clearance


class NearSingularError(SpectralError):
    """Raised when a resolvent is requested too close to an eigenvalue."""

    def __init__(self, message: str, *, distance: float) -> None:
        super().__init__(message)
        self.distance = distance


class QuadratureError(ContourError):
    """Raised when resolving the contour integrand needs more nodes than allowed."""

    def __init__(self, message: str, *, clearance: float, needed: int, cap: int) -> None:
        super().__init__(message, clearance=clearance)
        self.needed = needed
        self.cap = cap
