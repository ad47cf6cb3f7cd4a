"""Density map F(u; ρ) and the self-consistent fixed point ρ = F(u; ρ)."""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np
import structlog

from tblocality.modules.model import assemble
from tblocality.modules.scf.errors import ConvergenceError
from tblocality.modules.scf.mixing import AndersonMixer
from tblocality.modules.spectral import diagonalize, local_observables_spectral

if TYPE_CHECKING:
    from numpy.typing import ArrayLike, NDArray

    from tblocality.modules.lattice import Configuration, Displacement
    from tblocality.modules.model import Hamiltonian, TightBindingModel
    from tblocality.modules.spectral import Observable, SpectralCache

__all__ = [
    "Density",
    "ScfParams",
    "density_map",
    "evaluate_density_map",
    "scf_solve",
]

logger = structlog.get_logger()

# Iterations without a new best residual before the loop is declared stuck
_STALL_WINDOW = 25


@dataclass(frozen=True)
class ScfParams:
    """Fixed-point solver settings.

    Attributes:
        mixing: Linear mixing weight α in (0, 1].
        anderson_depth: Anderson history length, 0 for plain damped iteration.
        tol: Target residual ‖ρ - F(ρ)‖_∞.
        max_iter: Iteration cap.
    """

    mixing: float = 0.5
    anderson_depth: int = 5
    tol: float = 1e-10
    max_iter: int = 200

    def __post_init__(self) -> None:
        if not 0.0 < self.mixing <= 1.0:
            raise ValueError(f"mixing must lie in (0, 1], got {self.mixing}")
        if self.anderson_depth < 0:
            raise ValueError(f"anderson_depth must be >= 0, got {self.anderson_depth}")
        if self.tol <= 0:
            raise ValueError(f"tol must be positive, got {self.tol}")
        if self.max_iter < 1:
            raise ValueError(f"max_iter must be >= 1, got {self.max_iter}")


@dataclass(frozen=True, eq=False)
class Density:
    """Per-site electron density.

    Attributes:
        rho: Values in [0, N_b].
        residual: ‖ρ - F(u; ρ)‖_∞ at this density.
        converged: Whether ``residual`` met the solver tolerance.
        iterations: Density-map evaluations used to reach it.
        trace: (iteration, residual) history.
    """

    rho: NDArray[np.float64]
    residual: float
    converged: bool = False
    iterations: int = 0
    trace: tuple[tuple[int, float], ...] = ()


def evaluate_density_map(
    cfg: Configuration,
    u: Displacement | ArrayLike | None,
    rho_in: ArrayLike,
    model: TightBindingModel,
    obs: Observable,
) -> tuple[NDArray[np.float64], Hamiltonian, SpectralCache]:
    """F(u; ρ_in) together with the Hamiltonian and spectrum it came from.

    Raises:
        GapError: At zero temperature when μ is within 1e-8 of the spectrum.
    """
    h = assemble(cfg, u, rho_in, model)
    spec = diagonalize(h)
    if obs.zero_temperature:
        spec.gap(obs.mu).require(obs.mu)
    return local_observables_spectral(spec, obs), h, spec


def density_map(
    cfg: Configuration,
    u: Displacement | ArrayLike | None,
    rho_in: ArrayLike,
    model: TightBindingModel,
    obs: Observable,
) -> Density:
    """One application of the density map F(u; ·).

    Args:
        cfg: Reference configuration.
        u: Displacement.
        rho_in: Input density in [0, N_b].
        model: Tight-binding model.
        obs: Fermi-Dirac occupation observable.

    Returns:
        Density holding F(u; ρ_in); ``residual`` is ‖F(u; ρ_in) - ρ_in‖_∞.

    Raises:
        GapError: At zero temperature when μ is within 1e-8 of the spectrum.
    """
    rho_in = np.asarray(rho_in, dtype=float)
    rho_out, _, _ = evaluate_density_map(cfg, u, rho_in, model, obs)
    residual = float(np.abs(rho_out - rho_in).max(initial=0.0))
    return Density(rho=rho_out, residual=residual, iterations=1, trace=((1, residual),))


def scf_solve(
    cfg: Configuration,
    u: Displacement | ArrayLike | None,
    rho0: ArrayLike,
    model: TightBindingModel,
    obs: Observable,
    params: ScfParams | None = None,
) -> Density:
    """Solve ρ = F(u; ρ) by damped, optionally Anderson-accelerated, iteration.

    Args:
        cfg: Reference configuration.
        u: Displacement.
        rho0: Starting density in [0, N_b].
        model: Tight-binding model.
        obs: Fermi-Dirac occupation observable.
        params: Solver settings.

    Returns:
        Converged density with ‖ρ - F(u; ρ)‖_∞ <= ``params.tol``.

    Raises:
        ConvergenceError: If ``max_iter`` is reached or the residual stalls.
        GapError: If the gap at μ closes during a zero-temperature iteration.
    """
    params = params or ScfParams()
    n_b = model.n_orbitals
    rho = np.clip(np.asarray(rho0, dtype=float), 0.0, n_b)

    if model.onsite.is_linear:
        # v does not depend on ρ, so F is constant and F(F(ρ0)) = F(ρ0) exactly
        rho_out, _, _ = evaluate_density_map(cfg, u, rho, model, obs)
        logger.debug("scf_linear_model", n_sites=cfg.n_sites)
        return Density(rho=rho_out, residual=0.0, converged=True, iterations=1, trace=((1, 0.0),))

    mixer = AndersonMixer(params.anderson_depth, damping=params.mixing)
    trace: list[tuple[int, float]] = []
    best = np.inf
    best_at = 0

    for iteration in range(1, params.max_iter + 1):
        rho_out, _, _ = evaluate_density_map(cfg, u, rho, model, obs)
        residual = float(np.abs(rho_out - rho).max(initial=0.0))
        trace.append((iteration, residual))
        logger.debug("scf_iteration", iteration=iteration, residual=residual)

        if residual <= params.tol:
            logger.info("scf_converged", iterations=iteration, residual=residual)
            return Density(
                rho=rho,
                residual=residual,
                converged=True,
                iterations=iteration,
                trace=tuple(trace),
            )

        if residual < best:
            best, best_at = residual, iteration
        elif iteration - best_at >= _STALL_WINDOW:
            raise ConvergenceError(
                f"SCF residual stalled at {residual:.3e} (oscillating iteration)",
                residual=residual,
                iterations=iteration,
                trace=tuple(trace),
            )

        rho = np.clip(mixer.step(rho, rho_out), 0.0, n_b)

    last = trace[-1][1]
    raise ConvergenceError(
        f"SCF did not converge in {params.max_iter} iterations (residual {last:.3e})",
        residual=last,
        iterations=params.max_iter,
        trace=tuple(trace),
    )
