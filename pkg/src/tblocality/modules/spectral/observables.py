"""Fermi-Dirac occupation, grand-potential integrand and polynomial observables.

Each observable has two faces: real values on the spectrum (spectral sums)
and an analytic continuation used inside its paired contour. At zero
temperature the continuation is the one valid on the occupied-states contour:
1 for the occupation and 2(z - μ) for the grand potential.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import StrEnum
from typing import TYPE_CHECKING

import numpy as np
from numpy.polynomial import polynomial as npoly

from tblocality.modules.spectral.errors import DomainError

if TYPE_CHECKING:
    from numpy.typing import ArrayLike, NDArray

__all__ = [
    "Observable",
    "ObservableKind",
    "fermi",
    "grand_potential_integrand",
]

# Relative distance to a Matsubara pole treated as a hit
_POLE_TOL = 1e-12


def _check_poles(x: NDArray[np.complex128]) -> None:
    """Reject points β(z - μ) = iπ(2k + 1)."""
    if not np.iscomplexobj(x):
        return
    k = np.rint((x.imag / np.pi - 1.0) / 2.0)
    dist = np.abs(x - 1j * np.pi * (2.0 * k + 1.0))
    if np.any(dist < _POLE_TOL):
        raise DomainError("Fermi function evaluated at a Matsubara pole")


def _logistic(x: NDArray[np.generic]) -> NDArray[np.generic]:
    """1 / (1 + e^x) without overflow."""
    positive = np.real(x) > 0
    with np.errstate(over="ignore", invalid="ignore"):
        e_neg = np.exp(np.where(positive, -x, 0.0))
        e_pos = np.exp(np.where(positive, 0.0, x))
    return np.where(positive, e_neg / (1.0 + e_neg), 1.0 / (1.0 + e_pos))


def fermi(z: ArrayLike, mu: float, beta: float) -> NDArray[np.generic]:
    """Fermi-Dirac occupation f(z - μ) = 1 / (1 + e^{β(z - μ)}).

    Args:
        z: Real or complex energies.
        mu: Chemical potential.
        beta: Inverse temperature, ``math.inf`` for zero temperature.

    Returns:
        Occupations with the dtype of ``z`` (real input gives real output).
        At zero temperature f = 1 below μ, 0 above and 1/2 at μ.

    Raises:
        DomainError: At a Matsubara pole, or for non-real z at zero temperature.
    """
    z = np.asarray(z)
    if math.isinf(beta):
        if np.iscomplexobj(z) and np.any(np.abs(z.imag) > 0.0):
            raise DomainError("Zero-temperature Fermi function needs real energies")
        x = np.real(z) - mu
        return np.where(x < 0, 1.0, np.where(x > 0, 0.0, 0.5))
    if beta <= 0:
        raise DomainError(f"beta must be positive, got {beta}")
    x = beta * (z - mu)
    _check_poles(x)
    return _logistic(x)


def grand_potential_integrand(z: ArrayLike, mu: float, beta: float) -> NDArray[np.generic]:
    """𝔤^β(z) = (2/β) log(1 - f(z - μ)) = -(2/β) log(1 + e^{-β(z - μ)}).

    Uses the principal branch, analytic in the strip |Im β(z - μ)| < π.
    At zero temperature returns 2(z - μ) χ(z < μ) on the real axis.
    """
    z = np.asarray(z)
    if math.isinf(beta):
        x = np.real(z) - mu
        return np.where(x < 0, 2.0 * x, 0.0)
    w = beta * (z - mu)
    _check_poles(w)
    positive = np.real(w) > 0
    with np.errstate(over="ignore", invalid="ignore"):
        tail_pos = np.log1p(np.exp(np.where(positive, -w, 0.0)))
        tail_neg = np.log1p(np.exp(np.where(positive, 0.0, w)))
    return np.where(
        positive,
        -(2.0 / beta) * tail_pos,
        2.0 * (z - mu) - (2.0 / beta) * tail_neg,
    )


class ObservableKind(StrEnum):
    """Supported site observables."""

    FERMI = "fermi"
    GRAND_POTENTIAL = "grand-potential"
    POLYNOMIAL = "polynomial"


@dataclass(frozen=True)
class Observable:
    """Function 𝔬 whose site contributions O_l are measured.

    Attributes:
        kind: Observable family.
        mu: Chemical potential (fermi and grand-potential kinds).
        beta: Inverse temperature, ``math.inf`` for zero temperature.
        coefficients: Polynomial coefficients in ascending order.
    """

    kind: ObservableKind
    mu: float = 0.0
    beta: float = math.inf
    coefficients: tuple[float, ...] = ()

    def __post_init__(self) -> None:
        if self.kind is ObservableKind.POLYNOMIAL and not self.coefficients:
            raise ValueError("Polynomial observable needs coefficients")
        if not self.beta > 0:
            raise ValueError(f"beta must be positive, got {self.beta}")

    @classmethod
    def occupation(cls, mu: float, beta: float) -> Observable:
        """Fermi-Dirac occupation f(· - μ)."""
        return cls(ObservableKind.FERMI, mu=mu, beta=beta)

    @classmethod
    def grand_potential(cls, mu: float, beta: float) -> Observable:
        """Grand-potential integrand 𝔤^β."""
        return cls(ObservableKind.GRAND_POTENTIAL, mu=mu, beta=beta)

    @classmethod
    def polynomial(cls, coefficients: tuple[float, ...]) -> Observable:
        """Polynomial Σ_k c_k z^k."""
        return cls(ObservableKind.POLYNOMIAL, coefficients=tuple(coefficients))

    @property
    def zero_temperature(self) -> bool:
        """True for β = ∞ thermodynamic observables (these need a gap at μ)."""
        return self.kind is not ObservableKind.POLYNOMIAL and math.isinf(self.beta)

    def real_values(self, x: ArrayLike) -> NDArray[np.float64]:
        """Values on the real spectrum."""
        x = np.asarray(x, dtype=float)
        if self.kind is ObservableKind.FERMI:
            return np.asarray(fermi(x, self.mu, self.beta), dtype=float)
        if self.kind is ObservableKind.GRAND_POTENTIAL:
            return np.asarray(grand_potential_integrand(x, self.mu, self.beta), dtype=float)
        return np.asarray(npoly.polyval(x, self.coefficients), dtype=float)

    def derivative(self, x: ArrayLike) -> NDArray[np.float64]:
        """Derivative on the real spectrum (away from μ at zero temperature)."""
        x = np.asarray(x, dtype=float)
        if self.kind is ObservableKind.POLYNOMIAL:
            return np.asarray(npoly.polyval(x, npoly.polyder(self.coefficients)), dtype=float)
        f = np.asarray(fermi(x, self.mu, self.beta), dtype=float)
        if self.kind is ObservableKind.GRAND_POTENTIAL:
            return 2.0 * f
        if self.zero_temperature:
            return np.zeros_like(x)
        return -self.beta * f * (1.0 - f)

    def second_derivative(self, x: ArrayLike) -> NDArray[np.float64]:
        """Second derivative on the real spectrum (away from μ at zero temperature)."""
        x = np.asarray(x, dtype=float)
        if self.kind is ObservableKind.POLYNOMIAL:
            return np.asarray(npoly.polyval(x, npoly.polyder(self.coefficients, 2)), dtype=float)
        if self.zero_temperature:
            return np.zeros_like(x)
        f = np.asarray(fermi(x, self.mu, self.beta), dtype=float)
        occupied = f * (1.0 - f)
        if self.kind is ObservableKind.GRAND_POTENTIAL:
            return -2.0 * self.beta * occupied
        return self.beta**2 * occupied * (1.0 - 2.0 * f)

    def on_contour(self, z: ArrayLike) -> NDArray[np.complex128]:
        """Analytic continuation used inside the paired contour."""
        z = np.asarray(z, dtype=complex)
        if self.kind is ObservableKind.POLYNOMIAL:
            return np.asarray(npoly.polyval(z, self.coefficients), dtype=complex)
        if self.zero_temperature:
            if self.kind is ObservableKind.FERMI:
                return np.ones_like(z)
            return 2.0 * (z - self.mu)
        if self.kind is ObservableKind.FERMI:
            return np.asarray(fermi(z, self.mu, self.beta), dtype=complex)
        return np.asarray(grand_potential_integrand(z, self.mu, self.beta), dtype=complex)
