"""Decay of first and second derivatives of site observables with distance."""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING, Any

import numpy as np
import structlog

from tblocality.infrastructure.parallel import ordered_map
from tblocality.modules.lattice import pair_distances
from tblocality.modules.locality.decay import DecayFit, asymptotic_window, fit_decay
from tblocality.modules.response import ResponseCalculator

if TYPE_CHECKING:
    from numpy.typing import NDArray

    from tblocality.modules.scf import ElectronicState
    from tblocality.modules.spectral import Observable

__all__ = [
    "LocalityResult",
    "derivative_magnitudes",
    "locality_experiment",
    "nearest_distance",
]

logger = structlog.get_logger()


@dataclass(frozen=True, eq=False)
class LocalityResult:
    """Derivative magnitudes against distance and their decay fit.

    Attributes:
        order: Derivative order (1 or 2).
        fit: Decay fit over the asymptotic window.
        distances: Effective distance of each (l, m) pair; 2 r_lm for order 2.
        magnitudes: Derivative norm of each pair, shape (n, n).
    """

    order: int
    fit: DecayFit
    distances: NDArray[np.float64]
    magnitudes: NDArray[np.float64]

    def rows(self) -> list[dict[str, Any]]:
        """CSV rows (l, m, r, value)."""
        n = self.magnitudes.shape[0]
        return [
            {
                "l": a,
                "m": b,
                "r": float(self.distances[a, b]),
                "value": float(self.magnitudes[a, b]),
            }
            for a in range(n)
            for b in range(n)
        ]


def nearest_distance(distances: NDArray[np.float64]) -> float:
    """Smallest nonzero pair distance."""
    positive = distances[distances > 0]
    return float(positive.min()) if positive.size else 1.0


def _gradient_norms(calc: ResponseCalculator, obs: Observable, m: int) -> NDArray[np.float64]:
    columns = np.stack([calc.gradient_vector(obs, m, i) for i in range(calc.dim)], axis=1)
    return np.asarray(np.linalg.norm(columns, axis=1))


def _hessian_norms(calc: ResponseCalculator, obs: Observable, m: int) -> NDArray[np.float64]:
    total = np.zeros(calc.n_sites)
    for i in range(calc.dim):
        for j in range(calc.dim):
            total += calc.hessian_vector(obs, m, i, m, j) ** 2
    return np.asarray(np.sqrt(total))


def derivative_magnitudes(
    calc: ResponseCalculator,
    obs: Observable,
    order: int = 1,
    *,
    threads: int = 1,
) -> NDArray[np.float64]:
    """Norm of ∂O_l/∂u(m) (order 1) or ∂²O_l/∂u(m)² (order 2) for all (l, m).

    Returns:
        Array of shape (n, n) indexed [l, m].
    """
    if order not in (1, 2):
        raise ValueError(f"order must be 1 or 2, got {order}")
    calc.prepare(obs, second_order=order == 2)
    task = _gradient_norms if order == 1 else _hessian_norms
    columns = ordered_map(lambda m: task(calc, obs, m), range(calc.n_sites), threads)
    return np.stack(columns, axis=1)


def locality_experiment(
    state: ElectronicState,
    obs: Observable,
    order: int = 1,
    *,
    spacing: float | None = None,
    window: tuple[float, float] | None = None,
    threads: int = 1,
    calculator: ResponseCalculator | None = None,
) -> LocalityResult:
    """Fit the decay of derivatives of O_l with the distance to the displaced site.

    Args:
        state: Converged stable state.
        obs: Observable whose site contributions are differentiated.
        order: 1 for gradients, 2 for Hessians with m = n.
        spacing: Nearest-neighbour distance a; measured when omitted.
        window: Fit window; defaults to [2a, 90% quantile] of the sampled
            distances (doubled for order 2).
        threads: Worker count for the per-site sweep.
        calculator: Response calculator to reuse.

    Returns:
        Raw table and decay fit.

    Raises:
        StabilityError: If I - 𝓛 is singular.
        FitError: If the window holds too few samples.
    """
    calc = calculator or ResponseCalculator(state)
    magnitudes = derivative_magnitudes(calc, obs, order, threads=threads)
    raw = pair_distances(state.cfg, state.u)
    distances = order * raw
    a = spacing if spacing is not None else nearest_distance(raw)
    fit_window = window or asymptotic_window(distances, order * a)
    fit = fit_decay(distances, magnitudes, window=fit_window, use_envelope=True)
    logger.info(
        "locality_fit",
        order=order,
        eta_hat=fit.eta_hat,
        r_squared=fit.r_squared,
        n_samples=fit.n_samples,
    )
    return LocalityResult(order=order, fit=fit, distances=distances, magnitudes=magnitudes)
