"""Combes-Thomas check: off-diagonal decay of resolvent entries.

For z at distance 𝖽 from σ(H) the resolvent obeys
|[(H - z)^{-1}]^{ab}_{lk}| <= 2 𝖽^{-1} e^{-γ r_lk}. The rate γ is measured
by a decay fit and the bound is checked with half the fitted rate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING, Any

import numpy as np
import scipy.linalg as la
import structlog

from tblocality.modules.lattice import pair_distances
from tblocality.modules.locality.decay import VALUE_FLOOR, DecayFit, fit_decay
from tblocality.modules.locality.errors import FitError
from tblocality.modules.spectral import NearSingularError, resolvent_matrix

if TYPE_CHECKING:
    from numpy.typing import ArrayLike, NDArray

    from tblocality.modules.lattice import Configuration, Displacement
    from tblocality.modules.model import Hamiltonian

__all__ = [
    "CtReport",
    "ct_check",
    "site_blocks",
]

logger = structlog.get_logger()

SAFETY = 0.5


def site_blocks(matrix: NDArray[np.generic], n_sites: int, n_orbitals: int) -> NDArray[np.float64]:
    """max_ab |M^{ab}_{lk}| for every site pair."""
    blocks = np.abs(matrix).reshape(n_sites, n_orbitals, n_sites, n_orbitals)
    return np.asarray(blocks.max(axis=(1, 3)))


@dataclass(frozen=True, eq=False)
class CtReport:
    """Resolvent decay measured against the Combes-Thomas bound.

    Attributes:
        z: Energy the resolvent was evaluated at.
        distance: Actual dist(z, σ(H)).
        predicted_distance: The 𝖽 used in the bound.
        gamma_hat: Fitted decay rate, ``inf`` when every off-diagonal entry vanishes.
        fit: Underlying fit, None when there was nothing to fit.
        distances: Pair distances r_lk.
        magnitudes: max_ab |R^{ab}_{lk}|.
        bound: 2 𝖽^{-1} e^{-0.5 γ̂ r_lk}.
        violations: Pairs exceeding the bound.
    """

    z: complex
    distance: float
    predicted_distance: float
    gamma_hat: float
    fit: DecayFit | None
    distances: NDArray[np.float64]
    magnitudes: NDArray[np.float64]
    bound: NDArray[np.float64]
    violations: int

    def rows(self) -> list[dict[str, Any]]:
        """CSV rows (l, k, r, value, bound)."""
        n = self.distances.shape[0]
        return [
            {
                "l": a,
                "k": b,
                "r": float(self.distances[a, b]),
                "value": float(self.magnitudes[a, b]),
                "bound": float(self.bound[a, b]),
            }
            for a in range(n)
            for b in range(n)
        ]

    def as_dict(self) -> dict[str, Any]:
        """Summary fields."""
        return {
            "z": [self.z.real, self.z.imag],
            "distance": self.distance,
            "predicted_distance": self.predicted_distance,
            "gamma_hat": self.gamma_hat,
            "fit": None if self.fit is None else self.fit.as_dict(),
            "violations": self.violations,
        }


def ct_check(
    h: Hamiltonian,
    cfg: Configuration,
    u: Displacement | ArrayLike | None,
    z: complex,
    predicted_distance: float,
) -> CtReport:
    """Measure resolvent decay at ``z`` and count Combes-Thomas bound violations.

    Args:
        h: Hamiltonian.
        cfg: Configuration that ``h`` was assembled on.
        u: Displacement that ``h`` was assembled at.
        z: Complex energy.
        predicted_distance: Lower bound 𝖽 on dist(z, σ(H)).

    Returns:
        Report with the fitted rate and violation count.

    Raises:
        NearSingularError: If dist(z, σ(H)) is below ``predicted_distance``.
    """
    eigenvalues = la.eigvalsh(h.matrix)
    distance = float(np.abs(eigenvalues - z).min())
    if distance < predicted_distance * (1.0 - 1e-12):
        raise NearSingularError(
            f"dist(z, spectrum) = {distance:.3e} is below the predicted {predicted_distance:.3e}",
            distance=distance,
        )

    resolvent = resolvent_matrix(h, z)
    magnitudes = site_blocks(resolvent, h.n_sites, h.n_orbitals)
    distances = pair_distances(cfg, u)
    off = ~np.eye(h.n_sites, dtype=bool)

    fit: DecayFit | None = None
    if not np.any(magnitudes[off] > VALUE_FLOOR):
        gamma_hat = math.inf
    else:
        try:
            fit = fit_decay(distances[off], magnitudes[off], use_envelope=True)
            gamma_hat = fit.eta_hat
        except FitError as e:
            logger.warning("ct_fit_failed", error=str(e))
            gamma_hat = 0.0

    rate = 0.0 if math.isinf(gamma_hat) else SAFETY * max(gamma_hat, 0.0)
    bound = (2.0 / predicted_distance) * np.exp(-rate * distances)
    if math.isinf(gamma_hat):
        bound = np.where(off, 0.0, bound)
    violations = int(np.count_nonzero(magnitudes > bound * (1.0 + 1e-12)))
    logger.debug("ct_check", gamma_hat=gamma_hat, violations=violations)
    return CtReport(
        z=complex(z),
        distance=distance,
        predicted_distance=float(predicted_distance),
        gamma_hat=gamma_hat,
        fit=fit,
        distances=distances,
        magnitudes=magnitudes,
        bound=bound,
        violations=violations,
    )
