"""Resolvent evaluation (H - z)^{-1} by complex LU factorization."""

from __future__ import annotations

from typing import TYPE_CHECKING

import numpy as np
import scipy.linalg as la

from tblocality.modules.spectral.errors import NearSingularError, NumericalError

if TYPE_CHECKING:
    from numpy.typing import NDArray

    from tblocality.modules.model import Hamiltonian
    from tblocality.modules.spectral.eigen import SpectralCache

__all__ = [
    "NEAR_SINGULAR",
    "factorize_shifted",
    "resolvent_column",
    "resolvent_matrix",
]

NEAR_SINGULAR = 1e-8

_RESIDUAL_TOL = 1e-10

# Exactly singular shifted matrices
_SINGULAR_PIVOT = 1e-14


def _check_distance(h: Hamiltonian, z: complex, spec: SpectralCache | None) -> None:
    if spec is None:
        eigenvalues = la.eigvalsh(h.matrix)
    elif spec.fingerprint != h.fingerprint():
        raise NumericalError("Spectral cache belongs to a different Hamiltonian")
    else:
        eigenvalues = spec.eigenvalues
    distance = float(np.abs(eigenvalues - z).min())
    if distance < NEAR_SINGULAR:
        raise NearSingularError(
            f"z={z} lies {distance:.3e} from the spectrum", distance=distance
        )


def factorize_shifted(matrix: NDArray[np.float64], z: complex) -> tuple[NDArray[np.complex128], NDArray[np.int32]]:
    """LU factors of matrix - z I.

    Raises:
        NearSingularError: If a pivot is below the near-singularity threshold.
    """
    shifted = matrix.astype(complex) - z * np.eye(matrix.shape[0])
    lu, piv = la.lu_factor(shifted, check_finite=False)
    pivot = float(np.abs(np.diag(lu)).min())
    if pivot < _SINGULAR_PIVOT:
        raise NearSingularError(f"Near-singular pivot {pivot:.3e} at z={z}", distance=pivot)
    return lu, piv


def resolvent_column(
    h: Hamiltonian,
    z: complex,
    k: int,
    b: int = 0,
    *,
    spec: SpectralCache | None = None,
) -> NDArray[np.complex128]:
    """Column (k, b) of (H - z)^{-1}.

    Args:
        h: Hamiltonian.
        z: Complex energy outside the spectrum.
        k: Site index.
        b: Orbital index.
        spec: Spectrum of ``h`` used for the distance check when available.

    Returns:
        Solution x of (H - z) x = e_(k,b).

    Raises:
        NearSingularError: If z lies within 1e-8 of an eigenvalue.
        NumericalError: If the solve residual exceeds 1e-10.
    """
    _check_distance(h, z, spec)
    rhs = np.zeros(h.size, dtype=complex)
    rhs[h.index(k, b)] = 1.0
    lu, piv = factorize_shifted(h.matrix, z)
    x = la.lu_solve((lu, piv), rhs)
    residual = float(np.abs(h.matrix @ x - z * x - rhs).max())
    if residual > _RESIDUAL_TOL * max(1.0, float(np.abs(x).max())):
        raise NumericalError(f"Resolvent residual {residual:.3e} exceeds tolerance")
    return np.asarray(x)


def resolvent_matrix(
    h: Hamiltonian, z: complex, *, spec: SpectralCache | None = None
) -> NDArray[np.complex128]:
    """Full resolvent (H - z)^{-1}.

    Raises:
        NearSingularError: If z lies within 1e-8 of an eigenvalue.
    """
    _check_distance(h, z, spec)
    lu, piv = factorize_shifted(h.matrix, z)
    return np.asarray(la.lu_solve((lu, piv), np.eye(h.size, dtype=complex)))
