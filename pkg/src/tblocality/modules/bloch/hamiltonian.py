"""Bloch matrices H_ξ of the reference crystal.

    [H_ξ]_{ℓk} = Σ_γ h_{ℓk}(ℓ - k + Aγ) e^{-i(ℓ - k + Aγ)·ξ} + δ_{ℓk} (ε_ℓ + v(ρ_ℓ))

with the lattice sum truncated at the hopping cutoff, as in real space.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np
import scipy.linalg as la

from tblocality.modules.bloch.errors import BlochError
from tblocality.modules.model import lattice_translations

if TYPE_CHECKING:
    from numpy.typing import ArrayLike, NDArray

    from tblocality.modules.bloch.crystal import ReferenceCrystal

__all__ = [
    "BlochMatrix",
    "bloch_hamiltonian",
    "image_vectors",
]


@dataclass(frozen=True, eq=False)
class BlochMatrix:
    """Hermitian Bloch matrix at one wavevector.

    Attributes:
        xi: Wavevector ξ, shape (d,).
        matrix: Complex Hermitian matrix of size #Γ·N_b.
    """

    xi: NDArray[np.float64]
    matrix: NDArray[np.complex128]

    @property
    def hermiticity_error(self) -> float:
        """max |M - M†|."""
        return float(np.abs(self.matrix - self.matrix.conj().T).max(initial=0.0))

    def eigenvalues(self) -> NDArray[np.float64]:
        """Band energies at ξ in ascending order."""
        return np.asarray(la.eigvalsh(self.matrix))


def image_vectors(crystal: ReferenceCrystal, cutoff: float) -> NDArray[np.float64]:
    """Vectors ℓ - k + Aγ for every translation that can reach ``cutoff``.

    Returns:
        Array of shape (count, n_basis, n_basis, d).
    """
    basis = crystal.cell.basis
    diff = basis[:, np.newaxis, :] - basis[np.newaxis, :, :]
    extent = float(np.abs(diff).max(initial=0.0)) * math.sqrt(crystal.dim)
    shifts = lattice_translations(crystal.cell.matrix, cutoff, extent)
    return np.asarray(diff[np.newaxis] + shifts[:, np.newaxis, np.newaxis, :])


def bloch_hamiltonian(crystal: ReferenceCrystal, xi: ArrayLike) -> BlochMatrix:
    """Assemble H_ξ.

    Args:
        crystal: Reference crystal with a translation-invariant density.
        xi: Wavevector, shape (d,).

    Returns:
        Hermitian-symmetrised Bloch matrix.

    Raises:
        BlochError: If ``xi`` has the wrong dimension.
    """
    k = np.asarray(xi, dtype=float).reshape(-1)
    if k.shape != (crystal.dim,):
        raise BlochError(f"Wavevector has {k.size} components, expected {crystal.dim}")
    model = crystal.model
    cutoff = model.hopping.cutoff

    vectors = image_vectors(crystal, cutoff)
    r = np.linalg.norm(vectors, axis=-1)
    mask = (r > 0.0) & (r <= cutoff)
    hopping = np.zeros_like(r)
    hopping[mask] = model.hopping.value(r[mask])
    site = (hopping * np.exp(-1j * (vectors @ k))).sum(axis=0)

    matrix = np.kron(site, model.hopping.coupling_matrix()).astype(complex)
    onsite = model.onsite.site_energies(crystal.species) + model.onsite.value(crystal.rho)
    matrix[np.diag_indices_from(matrix)] += np.repeat(onsite, model.n_orbitals)
    matrix = 0.5 * (matrix + matrix.conj().T)
    k.setflags(write=False)
    return BlochMatrix(xi=k, matrix=matrix)
