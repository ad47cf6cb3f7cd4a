"""Dense symmetric eigendecomposition and spectral gaps."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import TYPE_CHECKING

import numpy as np
import scipy.linalg as la
import structlog

from tblocality.modules.spectral.errors import GapError, NumericalError

if TYPE_CHECKING:
    from numpy.typing import NDArray

    from tblocality.modules.model import Hamiltonian

__all__ = [
    "GapInfo",
    "SpectralCache",
    "diagonalize",
    "spectral_gap",
]

logger = structlog.get_logger()

# Eigenvalues closer than this to μ close the gap
_GAP_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class SpectralCache:
    """Eigenpairs of an assembled Hamiltonian.

    Attributes:
        eigenvalues: Ascending eigenvalues λ_s.
        eigenvectors: Orthonormal eigenvectors ψ_s as columns.
        n_sites: Number of sites.
        n_orbitals: Orbitals per site.
        fingerprint: Hash of the Hamiltonian the pairs belong to.
    """

    eigenvalues: NDArray[np.float64]
    eigenvectors: NDArray[np.float64]
    n_sites: int
    n_orbitals: int
    fingerprint: str

    @property
    def size(self) -> int:
        """Number of eigenpairs."""
        return int(self.eigenvalues.size)

    @cached_property
    def site_weights(self) -> NDArray[np.float64]:
        """W[l, s] = Σ_a [ψ_s]²_{la}."""
        psi = self.eigenvectors.reshape(self.n_sites, self.n_orbitals, self.size)
        return np.asarray(np.sum(psi**2, axis=1))

    @cached_property
    def site_projectors(self) -> NDArray[np.float64]:
        """P[l, s, t] = Σ_a [ψ_s]_{la} [ψ_t]_{la}, the eigenbasis form of site l."""
        psi = self.eigenvectors.reshape(self.n_sites, self.n_orbitals, self.size)
        return np.asarray(np.einsum("las,lat->lst", psi, psi, optimize=True))

    def to_eigenbasis(self, matrix: NDArray[np.float64]) -> NDArray[np.float64]:
        """Ψᵀ M Ψ."""
        return np.asarray(self.eigenvectors.T @ matrix @ self.eigenvectors)

    def gap(self, mu: float) -> GapInfo:
        """Gap of this spectrum at μ."""
        return spectral_gap(self.eigenvalues, mu)


def diagonalize(h: Hamiltonian) -> SpectralCache:
    """Eigendecomposition of a symmetric Hamiltonian.

    Raises:
        NumericalError: For non-finite entries or an inaccurate decomposition.
    """
    matrix = h.matrix
    if not np.all(np.isfinite(matrix)):
        raise NumericalError("Hamiltonian has non-finite entries")
    eigenvalues, eigenvectors = la.eigh(matrix)

    scale = max(1.0, float(np.linalg.norm(matrix, 2))) if matrix.size else 1.0
    residual = float(np.abs(matrix @ eigenvectors - eigenvectors * eigenvalues).max(initial=0.0))
    if residual > 1e-10 * scale:
        raise NumericalError(f"Eigenpair residual {residual:.3e} exceeds tolerance")

    eigenvalues.setflags(write=False)
    eigenvectors.setflags(write=False)
    return SpectralCache(
        eigenvalues=eigenvalues,
        eigenvectors=eigenvectors,
        n_sites=h.n_sites,
        n_orbitals=h.n_orbitals,
        fingerprint=h.fingerprint(),
    )


@dataclass(frozen=True)
class GapInfo:
    """Location of μ relative to the spectrum.

    Attributes:
        gap: Distance between the highest level below μ and the lowest above;
            twice the distance to μ if one side is empty.
        lower: Highest eigenvalue below μ, or None.
        upper: Lowest eigenvalue above μ, or None.
        distance_to_mu: Smallest |λ_s - μ|.
    """

    gap: float
    lower: float | None
    upper: float | None
    distance_to_mu: float

    @property
    def crossing(self) -> float | None:
        """Real point where an occupied-states contour crosses the gap."""
        if self.lower is None:
            return None
        if self.upper is None:
            return self.lower + 0.5 * self.gap
        return 0.5 * (self.lower + self.upper)

    def require(self, mu: float) -> None:
        """Raise GapError unless μ lies in a gap.

        Raises:
            GapError: If an eigenvalue lies within 1e-8 of μ.
        """
        if self.distance_to_mu < _GAP_TOL:
            raise GapError(
                f"Spectrum touches mu={mu} (distance {self.distance_to_mu:.3e})",
                gap=self.gap,
                mu=mu,
            )


def spectral_gap(eigenvalues: NDArray[np.float64], mu: float) -> GapInfo:
    """Gap of a spectrum at μ."""
    below = eigenvalues[eigenvalues < mu]
    above = eigenvalues[eigenvalues > mu]
    lower = float(below.max()) if below.size else None
    upper = float(above.min()) if above.size else None
    distance = float(np.abs(eigenvalues - mu).min()) if eigenvalues.size else math.inf
    if lower is not None and upper is not None:
        gap = upper - lower
    elif lower is not None:
        gap = 2.0 * (mu - lower)
    elif upper is not None:
        gap = 2.0 * (upper - mu)
    else:
        gap = math.inf
    if distance < _GAP_TOL:
        gap = 0.0
    return GapInfo(gap=gap, lower=lower, upper=upper, distance_to_mu=distance)
