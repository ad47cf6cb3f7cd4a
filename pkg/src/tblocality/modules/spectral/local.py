"""Site contributions O_l of an observable, by spectral sum and by contour quadrature."""

from __future__ import annotations

from typing import TYPE_CHECKING

import numpy as np
import scipy.linalg as la

from tblocality.modules.spectral.errors import ContourError, NumericalError
from tblocality.modules.spectral.resolvent import NEAR_SINGULAR, factorize_shifted

if TYPE_CHECKING:
    from numpy.typing import NDArray

    from tblocality.modules.model import Hamiltonian
    from tblocality.modules.spectral.contour import Contour
    from tblocality.modules.spectral.eigen import SpectralCache
    from tblocality.modules.spectral.observables import Observable

__all__ = [
    "local_observable_contour",
    "local_observable_spectral",
    "local_observables_contour",
    "local_observables_spectral",
]

_IMAG_TOL = 1e-8


def local_observables_spectral(spec: SpectralCache, obs: Observable) -> NDArray[np.float64]:
    """O_l = Σ_{s,a} 𝔬(λ_s) [ψ_s]²_{la} for every site."""
    return np.asarray(spec.site_weights @ obs.real_values(spec.eigenvalues))


def local_observable_spectral(spec: SpectralCache, obs: Observable, site: int) -> float:
    """O_l for a single site by spectral sum."""
    return float(spec.site_weights[site] @ obs.real_values(spec.eigenvalues))


def _check_clearance(h: Hamiltonian, contour: Contour) -> None:
    if contour.is_empty:
        return
    eigenvalues = la.eigvalsh(h.matrix)
    clearance = float(np.abs(contour.nodes[:, np.newaxis] - eigenvalues[np.newaxis, :]).min())
    if clearance < NEAR_SINGULAR or contour.clearance <= 0:
        raise ContourError(
            f"Contour clearance {clearance:.3e} too small for this Hamiltonian",
            clearance=clearance,
        )


def _finish(value: complex, scale: float) -> float:
    if abs(value.imag) > _IMAG_TOL * max(1.0, scale):
        raise NumericalError(f"Contour quadrature left an imaginary residual {value.imag:.3e}")
    return float(value.real)


def local_observables_contour(h: Hamiltonian, obs: Observable, contour: Contour) -> NDArray[np.float64]:
    """O_l = -(1/2πi) Σ_a ∮ 𝔬(z) [(H - z)^{-1}]_{la,la} dz for every site.

    Raises:
        ContourError: If the contour comes within 1e-8 of the spectrum of ``h``.
        NumericalError: If the quadrature leaves an imaginary residual.
    """
    _check_clearance(h, contour)
    total = np.zeros(h.size, dtype=complex)
    values = obs.on_contour(contour.nodes)
    identity = np.eye(h.size, dtype=complex)
    for z, w, o in zip(contour.nodes, contour.weights, values, strict=True):
        lu, piv = factorize_shifted(h.matrix, z)
        total += w * o * np.diag(la.lu_solve((lu, piv), identity))
    per_orbital = -total / (2j * np.pi)
    per_site = per_orbital.reshape(h.n_sites, h.n_orbitals).sum(axis=1)
    scale = float(np.abs(per_site).max(initial=0.0))
    return np.asarray([_finish(complex(v), scale) for v in per_site])


def local_observable_contour(h: Hamiltonian, obs: Observable, contour: Contour, site: int) -> float:
    """O_l for a single site by trapezoidal contour quadrature.

    Only the N_b resolvent columns of ``site`` are solved for at each node.

    Raises:
        ContourError: If the contour comes within 1e-8 of the spectrum of ``h``.
        NumericalError: If the quadrature leaves an imaginary residual.
    """
    _check_clearance(h, contour)
    rows = h.site_slice(site)
    rhs = np.zeros((h.size, h.n_orbitals), dtype=complex)
    rhs[rows, :] = np.eye(h.n_orbitals)
    total = 0j
    for z, w, o in zip(contour.nodes, contour.weights, obs.on_contour(contour.nodes), strict=True):
        lu, piv = factorize_shifted(h.matrix, z)
        cols = la.lu_solve((lu, piv), rhs)
        total += w * o * np.trace(cols[rows, :])
    value = -total / (2j * np.pi)
    return _finish(complex(value), abs(value))
