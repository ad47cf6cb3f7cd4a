"""Stability operator 𝓛 = ∂F/∂ρ and the margin of I - 𝓛.

    𝓛_lk = (1/2πi) ∮ f(z - μ) Σ_ab ([(𝓗 - z)^{-1}]^{ab}_{lk})² dz · v'(ρ(k))

The margin is the smallest singular value of I - 𝓛, i.e. 1/‖(I - 𝓛)^{-1}‖₂.
𝓛 is not normal, so the spectral distance dist(1, σ(𝓛)) is reported as well.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np
import scipy.linalg as la
import structlog

from tblocality.modules.model import assemble
from tblocality.modules.spectral import ContourError, NumericalError, SpectralKernels, diagonalize
from tblocality.modules.spectral.resolvent import NEAR_SINGULAR

if TYPE_CHECKING:
    from numpy.typing import ArrayLike, NDArray

    from tblocality.modules.lattice import Configuration, Displacement
    from tblocality.modules.model import TightBindingModel
    from tblocality.modules.spectral import Contour, Observable

__all__ = [
    "StabilityOperator",
    "spectral_distance",
    "stability_margin",
    "stability_operator",
]

logger = structlog.get_logger()

# Smallest singular value treated as exact singularity
_SINGULAR = 1e-12


@dataclass(frozen=True, eq=False)
class StabilityOperator:
    """Dense stability operator with its margins.

    Attributes:
        matrix: 𝓛, shape (n, n).
        margin: σ_min(I - 𝓛), 0 when singular.
        spectral_distance: dist(1, σ(𝓛)).
    """

    matrix: NDArray[np.float64]
    margin: float
    spectral_distance: float

    @classmethod
    def from_matrix(cls, matrix: ArrayLike) -> StabilityOperator:
        """Wrap a matrix and compute both margins."""
        matrix = np.asarray(matrix, dtype=float)
        return cls(
            matrix=matrix,
            margin=stability_margin(matrix),
            spectral_distance=spectral_distance(matrix),
        )

    @property
    def is_stable(self) -> bool:
        """Whether I - 𝓛 is invertible."""
        return self.margin > 0.0


def stability_margin(operator: StabilityOperator | ArrayLike) -> float:
    """1/‖(I - 𝓛)^{-1}‖₂ by singular values; 0 if I - 𝓛 is singular to 1e-12."""
    matrix = operator.matrix if isinstance(operator, StabilityOperator) else np.asarray(operator, dtype=float)
    if matrix.size == 0:
        return 1.0
    sigma = float(la.svdvals(np.eye(matrix.shape[0]) - matrix).min())
    return sigma if sigma >= _SINGULAR else 0.0


def spectral_distance(matrix: ArrayLike) -> float:
    """dist(1, σ(𝓛))."""
    matrix = np.asarray(matrix, dtype=float)
    if matrix.size == 0:
        return 1.0
    return float(np.abs(1.0 - la.eigvals(matrix)).min())


def stability_operator(
    cfg: Configuration,
    u: Displacement | ArrayLike | None,
    rho_star: ArrayLike,
    model: TightBindingModel,
    obs: Observable,
    contour: Contour | None,
) -> StabilityOperator:
    """Assemble 𝓛(u; ρ*) by quadrature of squared resolvent entries.

    Args:
        cfg: Reference configuration.
        u: Displacement.
        rho_star: Converged density.
        model: Tight-binding model.
        obs: Fermi-Dirac occupation observable paired with ``contour``.
        contour: Fermi contour built for the spectrum of 𝓗(u; ρ*), or None to
            use exact divided differences of f.

    Returns:
        Stability operator with margins.

    Raises:
        ContourError: If a node lies within 1e-8 of the spectrum.
        NumericalError: If the quadrature leaves an imaginary residual.
    """
    rho_star = np.asarray(rho_star, dtype=float)
    n = cfg.n_sites
    v_prime = model.onsite.derivative(rho_star)
    if model.onsite.is_linear or (contour is not None and contour.is_empty):
        return StabilityOperator.from_matrix(np.zeros((n, n)))

    h = assemble(cfg, u, rho_star, model)
    spec = diagonalize(h)
    if contour is None:
        projectors = spec.site_projectors
        k1 = SpectralKernels.build(spec, obs).k1
        coupling = (projectors * k1).reshape(n, -1) @ projectors.reshape(n, -1).T
        return _finish(np.asarray(coupling) * v_prime[np.newaxis, :])

    lam = spec.eigenvalues
    psi = spec.eigenvectors
    clearance = float(np.abs(contour.nodes[:, np.newaxis] - lam[np.newaxis, :]).min())
    if clearance < NEAR_SINGULAR:
        raise ContourError(f"Contour clearance {clearance:.3e} too small", clearance=clearance)

    n_b = model.n_orbitals
    g = contour.weights * obs.on_contour(contour.nodes) / (2j * np.pi)
    total = np.zeros((n, n), dtype=complex)
    for z, weight in zip(contour.nodes, g, strict=True):
        resolvent = (psi / (lam - z)) @ psi.T
        squared = (resolvent**2).reshape(n, n_b, n, n_b).sum(axis=(1, 3))
        total += weight * squared

    imag = float(np.abs(total.imag).max(initial=0.0))
    if imag > 1e-8 * max(1.0, float(np.abs(total.real).max(initial=0.0))):
        raise NumericalError(f"Stability operator has imaginary residual {imag:.3e}")
    return _finish(total.real * v_prime[np.newaxis, :])


def _finish(matrix: NDArray[np.float64]) -> StabilityOperator:
    operator = StabilityOperator.from_matrix(matrix)
    logger.debug(
        "stability_operator",
        margin=operator.margin,
        spectral_distance=operator.spectral_distance,
    )
    return operator
