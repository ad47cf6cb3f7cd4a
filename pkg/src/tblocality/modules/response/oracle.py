"""Central finite differences with a full SCF re-solve at every stencil point."""

from __future__ import annotations

import dataclasses
from typing import TYPE_CHECKING

import numpy as np
import structlog

from tblocality.modules.model import ModelError
from tblocality.modules.response.errors import OracleError
from tblocality.modules.scf import ScfError
from tblocality.modules.spectral import SpectralError, local_observables_spectral

if TYPE_CHECKING:
    from collections.abc import Callable

    from numpy.typing import ArrayLike, NDArray

    from tblocality.modules.scf import ElectronicState, TightBindingSystem
    from tblocality.modules.spectral import Observable

__all__ = [
    "ORACLE_TOLERANCE",
    "density_selector",
    "fd_oracle",
    "observable_selector",
    "scf_quantity",
]

logger = structlog.get_logger()

MIN_STEP = 1e-7
MAX_STEP = 1e-2

# SCF tolerance used inside oracles
ORACLE_TOLERANCE = 1e-12


def _evaluate(
    evaluate: Callable[[NDArray[np.float64]], float | NDArray[np.float64]],
    point: NDArray[np.float64],
) -> NDArray[np.float64]:
    try:
        return np.asarray(evaluate(point), dtype=float)
    except (ScfError, SpectralError, ModelError) as e:
        raise OracleError(f"Stencil point could not be evaluated: {e}") from e


def _stencil(
    evaluate: Callable[[NDArray[np.float64]], float | NDArray[np.float64]],
    point: NDArray[np.float64],
    first: NDArray[np.float64],
    second: NDArray[np.float64] | None,
    step: float,
    order: int,
) -> NDArray[np.float64]:
    if order == 1:
        plus = _evaluate(evaluate, point + step * first)
        minus = _evaluate(evaluate, point - step * first)
        return (plus - minus) / (2.0 * step)
    if second is None:
        plus = _evaluate(evaluate, point + step * first)
        center = _evaluate(evaluate, point)
        minus = _evaluate(evaluate, point - step * first)
        return (plus - 2.0 * center + minus) / step**2
    pp = _evaluate(evaluate, point + step * (first + second))
    pm = _evaluate(evaluate, point + step * (first - second))
    mp = _evaluate(evaluate, point - step * (first - second))
    mm = _evaluate(evaluate, point - step * (first + second))
    return (pp - pm - mp + mm) / (4.0 * step**2)


def fd_oracle(
    evaluate: Callable[[NDArray[np.float64]], float | NDArray[np.float64]],
    point: ArrayLike,
    direction: ArrayLike,
    *,
    step: float = 1e-5,
    order: int = 1,
    second_direction: ArrayLike | None = None,
    richardson: bool = False,
) -> float | NDArray[np.float64]:
    """Central finite-difference derivative of ``evaluate`` at ``point``.

    Args:
        evaluate: Quantity as a function of the flattened displacement.
        point: Flattened displacement.
        direction: Perturbation direction (same shape as ``point``).
        step: Step h in [1e-7, 1e-2].
        order: 1 for a directional derivative, 2 for a second derivative.
        second_direction: Second direction for a mixed second derivative;
            ``direction`` is used twice when omitted.
        richardson: Combine steps h and h/2 to cancel the leading error term.

    Returns:
        Derivative with the shape of the evaluated quantity.

    Raises:
        OracleError: If the step is out of range or a stencil point fails.
    """
    if not MIN_STEP <= step <= MAX_STEP:
        raise OracleError(f"Step {step} outside [{MIN_STEP}, {MAX_STEP}]")
    if order not in (1, 2):
        raise OracleError(f"Order must be 1 or 2, got {order}")
    x = np.asarray(point, dtype=float)
    a = np.asarray(direction, dtype=float)
    b = None if second_direction is None else np.asarray(second_direction, dtype=float)

    coarse = _stencil(evaluate, x, a, b, step, order)
    result = coarse
    if richardson:
        fine = _stencil(evaluate, x, a, b, 0.5 * step, order)
        result = (4.0 * fine - coarse) / 3.0
    logger.debug("fd_oracle", step=step, order=order, richardson=richardson)
    return float(result) if result.ndim == 0 else result


def observable_selector(
    obs: Observable, site: int | None = None
) -> Callable[[ElectronicState], float | NDArray[np.float64]]:
    """Select O_l (or every O_l when ``site`` is None) from a converged state."""

    def select(state: ElectronicState) -> float | NDArray[np.float64]:
        values = local_observables_spectral(state.spectrum, obs)
        return values if site is None else float(values[site])

    return select


def density_selector(site: int | None = None) -> Callable[[ElectronicState], float | NDArray[np.float64]]:
    """Select ρ(l) (or the whole density) from a converged state."""

    def select(state: ElectronicState) -> float | NDArray[np.float64]:
        return state.rho.copy() if site is None else float(state.rho[site])

    return select


def scf_quantity(
    system: TightBindingSystem,
    selector: Callable[[ElectronicState], float | NDArray[np.float64]],
    *,
    rho0: ArrayLike | None = None,
    tol: float = ORACLE_TOLERANCE,
) -> Callable[[NDArray[np.float64]], float | NDArray[np.float64]]:
    """Quantity of the self-consistent state as a function of the flat displacement.

    Every call runs a full SCF solve with tolerance ``tol``.
    """
    tight = dataclasses.replace(system, params=dataclasses.replace(system.params, tol=tol))
    shape = system.cfg.sites.shape

    def evaluate(flat: NDArray[np.float64]) -> float | NDArray[np.float64]:
        state = tight.solve(np.reshape(flat, shape), rho0=rho0)
        return selector(state)

    return evaluate
