"""Local minimisation of the grand potential over a free region.

Quasi-Newton descent: BFGS curvature updates, Armijo backtracking and a
noninterpenetration check on every trial geometry.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field, replace
from typing import TYPE_CHECKING, Any

import numpy as np
import scipy.linalg as la
import structlog

from tblocality.modules.lattice import as_displacement_array, noninterpenetration_constant
from tblocality.modules.model import ModelError
from tblocality.modules.relax.energy import GrandPotential
from tblocality.modules.relax.errors import RelaxationError
from tblocality.modules.response import ResponseCalculator
from tblocality.modules.scf import ScfError
from tblocality.modules.spectral import SpectralError

if TYPE_CHECKING:
    from numpy.typing import ArrayLike, NDArray

    from tblocality.modules.lattice import Displacement
    from tblocality.modules.scf import ElectronicState, TightBindingSystem

__all__ = [
    "RelaxParams",
    "RelaxResult",
    "RelaxStep",
    "relax_geometry",
]

logger = structlog.get_logger()

_ARMIJO = 1e-4
_MIN_STEP = 1e-10
# Curvature pairs with smaller |Δu| or |Δg| are skipped
_UPDATE_FLOOR = 1e-14
# Smallest eigenvalue of the curvature model before it is reset
_CURVATURE_FLOOR = 1e-8


@dataclass(frozen=True)
class RelaxParams:
    """Optimizer settings.

    Attributes:
        tol: Sup-norm gradient tolerance over the free region.
        max_iter: Maximum number of accepted steps.
        m_min: Smallest noninterpenetration constant a trial may have.
        max_step: Largest sup-norm change of u in one step.
        curvature: Scale of the initial curvature model.
        hessian_check: Report the smallest analytic Hessian eigenvalue at the end.
    """

    tol: float = 1e-8
    max_iter: int = 200
    m_min: float = 0.5
    max_step: float = 0.2
    curvature: float = 1.0
    hessian_check: bool = True

    def __post_init__(self) -> None:
        if self.tol <= 0 or self.max_iter < 0:
            raise ValueError(f"Need tol > 0 and max_iter >= 0, got {self.tol}, {self.max_iter}")
        if not 0 < self.m_min <= 1:
            raise ValueError(f"m_min must lie in (0, 1], got {self.m_min}")
        if self.max_step <= 0 or self.curvature <= 0:
            raise ValueError("max_step and curvature must be positive")


@dataclass(frozen=True)
class RelaxStep:
    """One accepted iterate."""

    iteration: int
    energy: float
    gradient_norm: float
    step_length: float
    noninterpenetration: float


@dataclass(frozen=True, eq=False)
class RelaxResult:
    """Outcome of a relaxation.

    Attributes:
        u: Final displacement, shape (n, d).
        energy: 𝒢^β(u).
        gradient: ∇𝒢^β(u), clamped components zeroed.
        gradient_norm: Sup norm of ``gradient``.
        iterations: Accepted steps taken.
        converged: Whether ``gradient_norm`` reached the tolerance.
        state: Converged electronic state at ``u``.
        noninterpenetration: 𝔪 of the final geometry.
        min_hessian_eigenvalue: Smallest Hessian eigenvalue over the free region.
        history: Accepted iterates in order.
    """

    u: NDArray[np.float64]
    energy: float
    gradient: NDArray[np.float64]
    gradient_norm: float
    iterations: int
    converged: bool
    state: ElectronicState
    noninterpenetration: float
    min_hessian_eigenvalue: float | None = None
    history: tuple[RelaxStep, ...] = field(default=())

    def rows(self) -> list[dict[str, Any]]:
        """CSV rows of the trajectory."""
        return [asdict(step) for step in self.history]

    def as_dict(self) -> dict[str, Any]:
        return {
            "energy": self.energy,
            "gradient_norm": self.gradient_norm,
            "iterations": self.iterations,
            "converged": self.converged,
            "noninterpenetration": self.noninterpenetration,
            "min_hessian_eigenvalue": self.min_hessian_eigenvalue,
        }


def _free_components(n_sites: int, dim: int, free_mask: ArrayLike | None) -> NDArray[np.bool_]:
    if free_mask is None:
        return np.ones(n_sites * dim, dtype=bool)
    mask = np.asarray(free_mask, dtype=bool).reshape(-1)
    if mask.shape != (n_sites,):
        raise ValueError(f"Free mask has {mask.size} entries for {n_sites} sites")
    return np.repeat(mask, dim)


def _noninterpenetration(u: NDArray[np.float64], functional: GrandPotential) -> float:
    cfg = functional.system.cfg
    if cfg.n_sites < 2:
        return 1.0
    return noninterpenetration_constant(cfg, u)


def _bfgs_update(
    curvature: NDArray[np.float64],
    du: NDArray[np.float64],
    dg: NDArray[np.float64],
    scale: float,
) -> NDArray[np.float64]:
    if np.linalg.norm(du) < _UPDATE_FLOOR or np.linalg.norm(dg) < _UPDATE_FLOOR:
        return curvature
    dot = float(dg @ du)
    h_du = curvature @ du
    denom = float(du @ h_du)
    if dot <= 0 or denom <= 0:
        return curvature
    updated = curvature + np.outer(dg, dg) / dot - np.outer(h_du, h_du) / denom
    if la.eigvalsh(updated)[0] <= _CURVATURE_FLOOR:
        logger.debug("curvature_reset")
        return scale * np.eye(curvature.shape[0])
    return updated


def relax_geometry(
    system: TightBindingSystem,
    u_init: Displacement | ArrayLike | None = None,
    free_mask: ArrayLike | None = None,
    params: RelaxParams | None = None,
    *,
    baseline: GrandPotential | None = None,
) -> RelaxResult:
    """Minimise 𝒢^β over the free sites starting from ``u_init``.

    Args:
        system: System whose grand potential is minimised.
        u_init: Starting displacement.
        free_mask: Per-site flags; clamped sites keep their starting displacement.
        params: Optimizer settings.
        baseline: Renormalisation point; defaults to the starting geometry.

    Returns:
        Converged result.

    Raises:
        RelaxationError: If every trial of a line search violates the
            noninterpenetration bound, or no convergence within ``max_iter``
            (``best`` holds the lowest-energy iterate).
    """
    opts = params or RelaxParams()
    cfg = system.cfg
    u = as_displacement_array(cfg, u_init).copy()
    free = _free_components(cfg.n_sites, cfg.dim, free_mask)
    functional = baseline or GrandPotential.baseline(system, u)

    state = functional.state0 if baseline is None else functional.solve(u)
    energy = functional.value(state)
    calc = ResponseCalculator(state)
    grad = functional.gradient(state, calc).reshape(-1) * free
    curvature = opts.curvature * np.eye(int(free.sum()))
    history: list[RelaxStep] = []
    iterations = 0

    def result(converged: bool) -> RelaxResult:
        g = grad.reshape(cfg.n_sites, cfg.dim)
        return RelaxResult(
            u=u.copy(),
            energy=energy,
            gradient=g.copy(),
            gradient_norm=float(np.abs(grad).max(initial=0.0)),
            iterations=iterations,
            converged=converged,
            state=state,
            noninterpenetration=_noninterpenetration(u, functional),
            history=tuple(history),
        )

    while float(np.abs(grad).max(initial=0.0)) > opts.tol:
        if iterations >= opts.max_iter:
            best = result(converged=False)
            raise RelaxationError(
                f"Relaxation did not converge in {opts.max_iter} steps "
                f"(gradient {best.gradient_norm:.3e})",
                best=best,
            )

        g_free = grad[free]
        direction = -la.solve(curvature, g_free, assume_a="pos")
        if float(direction @ g_free) >= 0:
            curvature = opts.curvature * np.eye(curvature.shape[0])
            direction = -g_free / opts.curvature
        longest = float(np.abs(direction).max())
        if longest > opts.max_step:
            direction *= opts.max_step / longest
        slope = float(direction @ g_free)
        slack = 1e-12 * max(1.0, abs(energy)) * cfg.n_sites

        t = 1.0
        accepted = None
        violations = trials = 0
        while t >= _MIN_STEP:
            trials += 1
            trial = u.copy().reshape(-1)
            trial[free] += t * direction
            trial = trial.reshape(cfg.n_sites, cfg.dim)
            m = _noninterpenetration(trial, functional)
            if m < opts.m_min:
                violations += 1
                t *= 0.5
                continue
            try:
                trial_state = functional.solve(trial, state.rho)
            except (ScfError, SpectralError, ModelError) as e:
                logger.debug("trial_state_failed", step=t, error=str(e))
                t *= 0.5
                continue
            trial_energy = functional.value(trial_state)
            if trial_energy <= energy + _ARMIJO * t * slope + slack:
                accepted = (trial, trial_state, trial_energy, m)
                break
            t *= 0.5

        if accepted is None:
            best = result(converged=False)
            if violations == trials:
                raise RelaxationError(
                    f"Every trial step violates noninterpenetration bound {opts.m_min}",
                    best=best,
                )
            raise RelaxationError(
                f"Line search failed at gradient {best.gradient_norm:.3e}",
                best=best,
            )

        trial, state, energy, m = accepted
        du = (trial - u).reshape(-1)[free]
        u = trial
        calc = ResponseCalculator(state)
        new_grad = functional.gradient(state, calc).reshape(-1) * free
        curvature = _bfgs_update(curvature, du, new_grad[free] - g_free, opts.curvature)
        grad = new_grad
        iterations += 1
        history.append(
            RelaxStep(
                iteration=iterations,
                energy=energy,
                gradient_norm=float(np.abs(grad).max()),
                step_length=float(np.abs(du).max()),
                noninterpenetration=m,
            )
        )
        logger.debug("relax_step", iteration=iterations, energy=energy, gradient_norm=history[-1].gradient_norm)

    final = result(converged=True)
    if opts.hessian_check and free.any():
        hessian = functional.hessian(state, calc)
        lowest = float(la.eigvalsh(hessian[np.ix_(free, free)])[0])
        final = replace(final, min_hessian_eigenvalue=lowest)
    logger.info(
        "relax_converged",
        iterations=iterations,
        energy=final.energy,
        gradient_norm=final.gradient_norm,
        min_hessian_eigenvalue=final.min_hessian_eigenvalue,
    )
    return final
