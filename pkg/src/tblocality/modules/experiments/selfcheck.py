"""Numerical self-checks: identities, oracles and exact updates."""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from typing import TYPE_CHECKING, Any

import numpy as np
import scipy.linalg as la
import structlog

from tblocality.modules.locality import inverse_action, woodbury_resolvent
from tblocality.modules.response import (
    ResponseCalculator,
    density_selector,
    fd_oracle,
    observable_selector,
    scf_quantity,
)
from tblocality.modules.scf import density_map
from tblocality.modules.spectral import (
    NumericalError,
    local_observables_contour,
    local_observables_spectral,
)

if TYPE_CHECKING:
    from numpy.typing import NDArray

    from tblocality.modules.scf import ElectronicState
    from tblocality.modules.spectral import Observable

__all__ = [
    "Check",
    "fd_checks",
    "stability_check",
    "trace_checks",
    "woodbury_checks",
]

logger = structlog.get_logger()

FD_STEP = 1e-4


@dataclass(frozen=True)
class Check:
    """One measured error against its tolerance."""

    name: str
    value: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return math.isfinite(self.value) and self.value <= self.tolerance

    def as_dict(self) -> dict[str, Any]:
        return {
            "name": self.name,
            "value": self.value,
            "tolerance": self.tolerance,
            "passed": self.passed,
        }


def _relative(actual: NDArray[np.float64] | float, expected: NDArray[np.float64] | float, floor: float = 1e-8) -> float:
    a = np.asarray(actual, dtype=float)
    b = np.asarray(expected, dtype=float)
    scale = max(float(np.abs(b).max(initial=0.0)), floor)
    return float(np.abs(a - b).max(initial=0.0)) / scale


def trace_checks(state: ElectronicState, obs: Observable) -> list[Check]:
    """Σ_l O_l against Σ_s 𝔬(λ_s), by eigenpairs and by contour quadrature.

    An unresolvable contour, or a quadrature that leaves an imaginary
    residual, fails the contour checks with an infinite error.
    """
    spectrum = state.spectrum
    direct = float(obs.real_values(spectrum.eigenvalues).sum())
    spectral = local_observables_spectral(spectrum, obs)
    scale = max(1.0, abs(direct))
    checks = [Check("trace_identity_spectral", abs(float(spectral.sum()) - direct) / scale, 1e-12)]
    contour = state.system.contour(spectrum, obs)
    quadrature: NDArray[np.float64] | None = None
    if contour is None:
        logger.warning("contour_check_failed", error="contour unresolved", beta=obs.beta)
    else:
        try:
            quadrature = local_observables_contour(state.hamiltonian, obs, contour)
        except NumericalError as e:
            logger.warning("contour_check_failed", error=str(e))
    if quadrature is None:
        return [
            *checks,
            Check("trace_identity_contour", math.inf, 1e-8),
            Check("contour_vs_spectral", math.inf, 1e-8),
        ]
    return [
        *checks,
        Check("trace_identity_contour", abs(float(quadrature.sum()) - direct) / scale, 1e-8),
        Check("contour_vs_spectral", float(np.abs(quadrature - spectral).max()), 1e-8),
    ]


def woodbury_checks(rng: np.random.Generator, size: int = 8) -> list[Check]:
    """Finite-rank inverse updates against dense inverses on a seeded instance."""
    base = rng.standard_normal((size, size)) + size * np.eye(size)
    left = 0.5 * rng.standard_normal((size, 2))
    right = 0.5 * rng.standard_normal((2, size))
    exact = la.inv(base + left @ right)
    updated = woodbury_resolvent(inverse_action(base), left @ right).matrix(size)

    first = woodbury_resolvent(inverse_action(base), (left[:, :1], right[:1]))
    composed = woodbury_resolvent(first, (left[:, 1:], right[1:])).matrix(size)
    return [
        Check("woodbury_rank2", float(np.abs(updated - exact).max()), 1e-10),
        Check("woodbury_composed", float(np.abs(composed - exact).max()), 1e-10),
    ]


def stability_check(state: ElectronicState, step: float = FD_STEP) -> Check:
    """𝓛 against the central-difference Jacobian of the density map."""
    cfg, model, fermi = state.cfg, state.model, state.system.fermi
    rho = state.rho
    n_b = model.n_orbitals
    columns = []
    for k in range(cfg.n_sites):
        h = min(step, rho[k], n_b - rho[k]) or step
        plus, minus = rho.copy(), rho.copy()
        plus[k] += h
        minus[k] -= h
        forward = density_map(cfg, state.u, plus, model, fermi).rho
        backward = density_map(cfg, state.u, minus, model, fermi).rho
        columns.append((forward - backward) / (2.0 * h))
    jacobian = np.stack(columns, axis=1)
    error = float(np.abs(jacobian - state.stability.matrix).max(initial=0.0))
    return Check("stability_operator_fd", error, 1e-6)


def fd_checks(state: ElectronicState, obs: Observable, site: int | None = None) -> list[Check]:
    """Analytic responses at one displaced site against SCF finite differences.

    Args:
        state: Converged stable state.
        obs: Observable whose site contributions are differentiated.
        site: Probed site m; the middle site when omitted.
    """
    system = state.system
    m = state.cfg.n_sites // 2 if site is None else site
    calc = ResponseCalculator(state)
    point = state.u.reshape(-1)
    direction = np.zeros_like(point)
    direction[m * state.cfg.dim] = 1.0

    density_fd = fd_oracle(
        scf_quantity(system, density_selector(), rho0=state.rho),
        point,
        direction,
        step=FD_STEP,
        richardson=True,
    )
    gradient_fd = fd_oracle(
        scf_quantity(system, observable_selector(obs), rho0=state.rho),
        point,
        direction,
        step=FD_STEP,
        richardson=True,
    )

    tight = dataclasses.replace(system, params=dataclasses.replace(system.params, tol=1e-12))
    shape = state.u.shape

    def gradient_at(flat: NDArray[np.float64]) -> NDArray[np.float64]:
        moved = tight.solve(np.reshape(flat, shape), rho0=state.rho)
        return ResponseCalculator(moved).gradient_vector(obs, m, 0)

    hessian_fd = fd_oracle(gradient_at, point, direction, step=FD_STEP, richardson=True)

    table = calc.gradient_table(obs)
    scale = max(1.0, float(np.abs(table.values).max(initial=0.0)))
    checks = [
        Check("density_response_fd", _relative(calc.density_response(m, 0), density_fd), 1e-5),
        Check("site_gradient_fd", _relative(calc.gradient_vector(obs, m, 0), gradient_fd), 1e-5),
        Check("site_hessian_fd", _relative(calc.hessian_vector(obs, m, 0, m, 0), hessian_fd), 1e-4),
        Check("force_sum_rule", table.sum_rule_residual() / scale, 1e-8),
    ]
    logger.debug("fd_checks", site=m, errors={c.name: c.value for c in checks})
    return checks
