"""Two-centre hopping and bounded on-site models."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import StrEnum
from typing import TYPE_CHECKING

import numpy as np

if TYPE_CHECKING:
    from collections.abc import Sequence

    from numpy.typing import ArrayLike, NDArray

__all__ = [
    "HoppingModel",
    "ModelError",
    "OnsiteKind",
    "OnsiteModel",
]

# Hopping magnitudes below this are dropped by the default cutoff
_HOPPING_FLOOR = 1e-12


class ModelError(ValueError):
    """Raised when model parameters or inputs are invalid."""


@dataclass(frozen=True)
class HoppingModel:
    """Isotropic exponential hopping h(r) = -h0 e^{-γ0 (r - r_on)}.

    Attributes:
        h0: Energy prefactor.
        gamma0: Decay rate γ0 (inverse length).
        r_on: Onset radius.
        n_orbitals: Orbitals per site N_b.
        r_cut: Numerical cutoff; derived from ``h0`` and ``gamma0`` if omitted.
        orbital_coupling: Symmetric N_b x N_b matrix T with h^{ab} = T_ab h.
            Defaults to the identity.
    """

    h0: float = 1.0
    gamma0: float = 1.0
    r_on: float = 1.0
    n_orbitals: int = 1
    r_cut: float | None = None
    orbital_coupling: tuple[tuple[float, ...], ...] | None = None

    def __post_init__(self) -> None:
        if self.h0 <= 0 or self.gamma0 <= 0:
            raise ModelError(f"h0 and gamma0 must be positive, got {self.h0}, {self.gamma0}")
        if self.n_orbitals < 1:
            raise ModelError(f"n_orbitals must be >= 1, got {self.n_orbitals}")
        if self.r_cut is not None and self.r_cut <= 0:
            raise ModelError(f"r_cut must be positive, got {self.r_cut}")
        if self.orbital_coupling is not None:
            t = np.asarray(self.orbital_coupling, dtype=float)
            if t.shape != (self.n_orbitals, self.n_orbitals):
                raise ModelError(
                    f"orbital_coupling must be {self.n_orbitals}x{self.n_orbitals}"
                )
            if not np.array_equal(t, t.T):
                raise ModelError("orbital_coupling must be symmetric")
            if np.abs(t).max() > 1.0:
                raise ModelError("orbital_coupling entries must satisfy |T_ab| <= 1")

    @property
    def cutoff(self) -> float:
        """Cutoff radius beyond which hopping is zero."""
        if self.r_cut is not None:
            return self.r_cut
        return self.r_on + math.log(self.h0 / _HOPPING_FLOOR) / self.gamma0

    def coupling_matrix(self) -> NDArray[np.float64]:
        """Orbital coupling matrix T."""
        if self.orbital_coupling is None:
            return np.eye(self.n_orbitals)
        return np.asarray(self.orbital_coupling, dtype=float)

    def value(self, r: ArrayLike) -> NDArray[np.float64]:
        """h(r), zero beyond the cutoff."""
        r = np.asarray(r, dtype=float)
        h = -self.h0 * np.exp(-self.gamma0 * (r - self.r_on))
        return np.where(r <= self.cutoff, h, 0.0)

    def derivative(self, r: ArrayLike) -> NDArray[np.float64]:
        """h'(r) = -γ0 h(r)."""
        return -self.gamma0 * self.value(r)

    def second_derivative(self, r: ArrayLike) -> NDArray[np.float64]:
        """h''(r) = γ0² h(r)."""
        return self.gamma0**2 * self.value(r)


class OnsiteKind(StrEnum):
    """Functional form of the on-site term v(ρ)."""

    CONSTANT = "constant"
    SATURATING = "saturating"


@dataclass(frozen=True)
class OnsiteModel:
    """On-site term v(ρ) plus per-species site energies.

    ``constant`` gives v ≡ c. ``saturating`` gives v(ρ) = U tanh(ρ - ρ0),
    bounded with bounded derivatives.

    Attributes:
        kind: Functional form.
        constant: Value c for the constant kind.
        strength: U for the saturating kind.
        rho0: Offset ρ0 for the saturating kind.
        species_energies: Energy ε added to the diagonal for each species label.
    """

    kind: OnsiteKind = OnsiteKind.CONSTANT
    constant: float = 0.0
    strength: float = 0.0
    rho0: float = 0.0
    species_energies: dict[str, float] = field(default_factory=dict)

    @property
    def is_linear(self) -> bool:
        """True when v does not depend on ρ."""
        return self.kind is OnsiteKind.CONSTANT or self.strength == 0.0

    def value(self, rho: ArrayLike) -> NDArray[np.float64]:
        """v(ρ)."""
        rho = np.asarray(rho, dtype=float)
        if self.kind is OnsiteKind.CONSTANT:
            return np.full_like(rho, self.constant)
        return self.strength * np.tanh(rho - self.rho0)

    def derivative(self, rho: ArrayLike) -> NDArray[np.float64]:
        """v'(ρ)."""
        rho = np.asarray(rho, dtype=float)
        if self.kind is OnsiteKind.CONSTANT:
            return np.zeros_like(rho)
        return self.strength / np.cosh(rho - self.rho0) ** 2

    def second_derivative(self, rho: ArrayLike) -> NDArray[np.float64]:
        """v''(ρ)."""
        rho = np.asarray(rho, dtype=float)
        if self.kind is OnsiteKind.CONSTANT:
            return np.zeros_like(rho)
        x = rho - self.rho0
        return -2.0 * self.strength * np.tanh(x) / np.cosh(x) ** 2

    def sup_norms(self) -> tuple[float, float, float]:
        """Closed-form (‖v‖_∞, ‖v'‖_∞, ‖v''‖_∞)."""
        if self.kind is OnsiteKind.CONSTANT:
            return abs(self.constant), 0.0, 0.0
        u = abs(self.strength)
        # max of 2 sech² x |tanh x| is 4/(3√3), attained at tanh² x = 1/3
        return u, u, u * 4.0 / (3.0 * math.sqrt(3.0))

    def site_energies(self, species: Sequence[str]) -> NDArray[np.float64]:
        """Species energy ε for each site."""
        return np.asarray([self.species_energies.get(s, 0.0) for s in species])

