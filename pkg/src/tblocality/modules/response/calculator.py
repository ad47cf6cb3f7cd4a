"""Analytic derivatives of self-consistent site observables.

Everything is expanded in the eigenbasis of 𝓗(u; ρ*). For a displacement
component α = (m, i) let Ã_α = Ψᵀ ∂𝓗^L/∂u_α Ψ and let P_k be the eigenbasis
form of site k. With Q1 and Q2 the first and second order contour
functionals (see ``tblocality.modules.spectral.kernels``; exact divided
differences replace the quadrature when the contour cannot be resolved):

    φ_α   = Q1^f(Ã_α)                          response vector
    ρ_α   = (I - 𝓛)^{-1} φ_α                    density response
    T̃_α   = Ã_α + Σ_k v'(ρ_k) ρ_{k,α} P_k        total first-order perturbation
    ∂_α O = Q1^o(T̃_α)                           site gradient

and for the second derivative, with W = C̃_αβ + Σ_k v''(ρ_k) ρ_{k,α} ρ_{k,β} P_k,

    ρ_αβ     = (I - 𝓛)^{-1} [Q2^f(T̃_α, T̃_β) + Q1^f(W)]
    ∂_αβ O   = Q2^o(T̃_α, T̃_β) + Q1^o(W + Σ_k v'(ρ_k) ρ_{k,αβ} P_k)

Q1 of a combination Σ_k c_k P_k is G c with G_lk = Σ_st P_l[s,t] P_k[s,t] K1_st,
so 𝓛 = G^f diag(v').
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import TYPE_CHECKING, Any

import numpy as np
import scipy.linalg as la
import structlog

from tblocality.modules.lattice import pair_distances
from tblocality.modules.model import hamiltonian_derivative, hamiltonian_second_derivative
from tblocality.modules.scf import StabilityError, stability_margin
from tblocality.modules.spectral import ContourKernels, SpectralKernels

if TYPE_CHECKING:
    from numpy.typing import NDArray

    from tblocality.modules.scf import ElectronicState
    from tblocality.modules.spectral import Observable

__all__ = [
    "ResponseCalculator",
    "ResponseVector",
    "SiteGradient",
    "density_response",
    "response_vector",
    "site_gradient",
    "site_hessian",
]

logger = structlog.get_logger()


@dataclass(frozen=True, eq=False)
class ResponseVector:
    """Response vector φ^(m) for displacement direction (m, i).

    Attributes:
        phi: Per-site values.
        site: Source site m.
        direction: Cartesian direction i.
    """

    phi: NDArray[np.float64]
    site: int
    direction: int


@dataclass(frozen=True, eq=False)
class SiteGradient:
    """Table of ∂O_l/∂[u(m)]_i.

    Attributes:
        values: Array of shape (n, n, d) indexed [l, m, i].
        distances: Pair distances r_lm of the displaced configuration.
    """

    values: NDArray[np.float64]
    distances: NDArray[np.float64]

    def total(self) -> NDArray[np.float64]:
        """Gradient of Σ_l O_l, shape (n, d)."""
        return np.asarray(self.values.sum(axis=0))

    def sum_rule_residual(self) -> float:
        """max_{l,i} |Σ_m ∂O_l/∂[u(m)]_i|, zero for translation-invariant models."""
        return float(np.abs(self.values.sum(axis=1)).max(initial=0.0))

    def rows(self) -> list[dict[str, Any]]:
        """CSV rows (l, m, i, value, r)."""
        n, _, d = self.values.shape
        return [
            {
                "l": site,
                "m": m,
                "i": i,
                "value": float(self.values[site, m, i]),
                "r": float(self.distances[site, m]),
            }
            for site in range(n)
            for m in range(n)
            for i in range(d)
        ]


def _first(projectors: NDArray[np.float64], k1: NDArray[np.float64], x: NDArray[np.float64]) -> NDArray[np.float64]:
    """Q1(X)_l = Σ_st P_l[s,t] X_st K1_st."""
    return np.asarray(np.einsum("lst,st->l", projectors, x * k1))


def _second(
    projectors: NDArray[np.float64],
    k2: NDArray[np.float64],
    x: NDArray[np.float64],
    y: NDArray[np.float64],
) -> NDArray[np.float64]:
    """Q2(X, Y)_l = Σ_str P_l[r,s] (X_st Y_tr + Y_st X_tr) K2_str."""
    inner = np.einsum("st,tr,str->sr", x, y, k2) + np.einsum("st,tr,str->sr", y, x, k2)
    return np.asarray(np.einsum("lrs,sr->l", projectors, inner))


def _coupling(projectors: NDArray[np.float64], k1: NDArray[np.float64]) -> NDArray[np.float64]:
    n = projectors.shape[0]
    flat = projectors.reshape(n, -1)
    return np.asarray((projectors * k1).reshape(n, -1) @ flat.T)


class ResponseCalculator:
    """First and second derivatives of site observables at one converged state.

    Kernels, 𝓛 and the factorisation of I - 𝓛 are computed once and shared by
    every query. Call :meth:`prepare` before querying from several threads.

    Args:
        state: Converged electronic state.
    """

    def __init__(self, state: ElectronicState) -> None:
        self.state = state
        self._spec = state.spectrum
        self._kernels: dict[Observable, ContourKernels | SpectralKernels] = {}
        self._couplings: dict[Observable, NDArray[np.float64]] = {}
        onsite = state.model.onsite
        self._v1 = onsite.derivative(state.rho)
        self._v2 = onsite.second_derivative(state.rho)
        self._linear = onsite.is_linear

    @property
    def n_sites(self) -> int:
        """Number of sites."""
        return self.state.cfg.n_sites

    @property
    def dim(self) -> int:
        """Spatial dimension."""
        return self.state.cfg.dim

    def kernels(self, obs: Observable) -> ContourKernels | SpectralKernels:
        """Kernels of ``obs``, exact divided differences when its contour is unresolved."""
        if obs not in self._kernels:
            if obs == self.state.system.fermi:
                contour = self.state.fermi_contour
            else:
                contour = self.state.system.contour(self._spec, obs)
            if contour is None:
                self._kernels[obs] = SpectralKernels.build(self._spec, obs)
            else:
                self._kernels[obs] = ContourKernels.build(self._spec, obs, contour)
        return self._kernels[obs]

    def coupling(self, obs: Observable) -> NDArray[np.float64]:
        """G_lk = Q1(P_k)_l for ``obs``."""
        if obs not in self._couplings:
            self._couplings[obs] = _coupling(self._spec.site_projectors, self.kernels(obs).k1)
        return self._couplings[obs]

    @property
    def fermi(self) -> Observable:
        """Occupation observable of the state."""
        return self.state.system.fermi

    @cached_property
    def stability_matrix(self) -> NDArray[np.float64]:
        """𝓛 = G^f diag(v')."""
        if self._linear:
            return np.zeros((self.n_sites, self.n_sites))
        return np.asarray(self.coupling(self.fermi) * self._v1[np.newaxis, :])

    @cached_property
    def margin(self) -> float:
        """σ_min(I - 𝓛)."""
        return stability_margin(self.stability_matrix)

    @cached_property
    def _factor(self) -> tuple[NDArray[np.float64], NDArray[np.int32]] | None:
        if self._linear:
            return None
        if self.margin <= 0.0:
            raise StabilityError("I - L is singular at this state", margin=self.margin)
        lu, piv = la.lu_factor(np.eye(self.n_sites) - self.stability_matrix)
        return lu, piv

    def _solve(self, rhs: NDArray[np.float64]) -> NDArray[np.float64]:
        factor = self._factor
        if factor is None:
            return rhs
        return np.asarray(la.lu_solve(factor, rhs))

    def prepare(self, *observables: Observable, second_order: bool = False) -> None:
        """Compute shared caches eagerly."""
        for obs in (self.fermi, *observables):
            kernels = self.kernels(obs)
            self.coupling(obs)
            if second_order:
                _ = kernels.k2
        _ = self._factor
        _ = self._first_order

    def _index(self, m: int, i: int) -> int:
        if not 0 <= m < self.n_sites or not 0 <= i < self.dim:
            raise IndexError(f"Displacement component ({m}, {i}) out of range")
        return m * self.dim + i

    @cached_property
    def _first_order(self) -> tuple[NDArray[np.float64], NDArray[np.float64], NDArray[np.float64]]:
        """(Ã, φ, ρ') for every displacement component, indexed by α = m d + i."""
        state = self.state
        projectors = self._spec.site_projectors
        k1 = self.kernels(self.fermi).k1
        components = self.n_sites * self.dim
        a_tilde = np.empty((components, self._spec.size, self._spec.size))
        phi = np.empty((components, self.n_sites))
        for m in range(self.n_sites):
            for i in range(self.dim):
                alpha = m * self.dim + i
                a = hamiltonian_derivative(state.cfg, state.u, state.model, m, i)
                a_tilde[alpha] = self._spec.to_eigenbasis(a)
                phi[alpha] = _first(projectors, k1, a_tilde[alpha])
        rho1 = np.ascontiguousarray(self._solve(phi.T).T)
        return a_tilde, phi, rho1

    def _total_perturbation(self, alpha: int) -> NDArray[np.float64]:
        a_tilde, _, rho1 = self._first_order
        if self._linear:
            return a_tilde[alpha]
        weights = self._v1 * rho1[alpha]
        return np.asarray(a_tilde[alpha] + np.einsum("k,kst->st", weights, self._spec.site_projectors))

    def response_vector(self, m: int, i: int) -> ResponseVector:
        """φ^(m) for direction i."""
        _, phi, _ = self._first_order
        return ResponseVector(phi=phi[self._index(m, i)].copy(), site=m, direction=i)

    def density_response(self, m: int, i: int) -> NDArray[np.float64]:
        """∂ρ/∂[u(m)]_i = (I - 𝓛)^{-1} φ^(m).

        Raises:
            StabilityError: If I - 𝓛 is singular.
        """
        _, _, rho1 = self._first_order
        return np.asarray(rho1[self._index(m, i)].copy())

    def gradient_vector(self, obs: Observable, m: int, i: int) -> NDArray[np.float64]:
        """∂O_l/∂[u(m)]_i for every l."""
        alpha = self._index(m, i)
        a_tilde, _, rho1 = self._first_order
        kernels = self.kernels(obs)
        value = _first(self._spec.site_projectors, kernels.k1, a_tilde[alpha])
        if not self._linear:
            value = value + self.coupling(obs) @ (self._v1 * rho1[alpha])
        return np.asarray(value)

    def site_gradient(self, obs: Observable, site: int, m: int, i: int) -> float:
        """∂O_l/∂[u(m)]_i."""
        return float(self.gradient_vector(obs, m, i)[site])

    def gradient_table(self, obs: Observable) -> SiteGradient:
        """All ∂O_l/∂[u(m)]_i."""
        n, d = self.n_sites, self.dim
        values = np.empty((n, n, d))
        for m in range(n):
            for i in range(d):
                values[:, m, i] = self.gradient_vector(obs, m, i)
        return SiteGradient(values=values, distances=pair_distances(self.state.cfg, self.state.u))

    def total_gradient(self, obs: Observable) -> NDArray[np.float64]:
        """Gradient of Σ_l O_l, shape (n, d)."""
        return self.gradient_table(obs).total()

    def hessian_vector(self, obs: Observable, m: int, i: int, n: int, j: int) -> NDArray[np.float64]:
        """∂²O_l/∂[u(m)]_i ∂[u(n)]_j for every l."""
        alpha = self._index(m, i)
        beta = self._index(n, j)
        state = self.state
        projectors = self._spec.site_projectors
        _, _, rho1 = self._first_order

        t_alpha = self._total_perturbation(alpha)
        t_beta = self._total_perturbation(beta)
        c_tilde = self._spec.to_eigenbasis(
            hamiltonian_second_derivative(state.cfg, state.u, state.model, m, i, n, j)
        )
        kernels = self.kernels(obs)
        value = _second(projectors, kernels.k2, t_alpha, t_beta) + _first(projectors, kernels.k1, c_tilde)
        if self._linear:
            return np.asarray(value)

        weights = self._v2 * rho1[alpha] * rho1[beta]
        fermi = self.kernels(self.fermi)
        rhs = (
            _second(projectors, fermi.k2, t_alpha, t_beta)
            + _first(projectors, fermi.k1, c_tilde)
            + self.coupling(self.fermi) @ weights
        )
        rho2 = self._solve(rhs)
        return np.asarray(value + self.coupling(obs) @ (weights + self._v1 * rho2))

    def site_hessian(self, obs: Observable, site: int, m: int, n: int, i: int, j: int) -> float:
        """∂²O_l/∂[u(m)]_i ∂[u(n)]_j."""
        return float(self.hessian_vector(obs, m, i, n, j)[site])

    def total_hessian(self, obs: Observable) -> NDArray[np.float64]:
        """Hessian of Σ_l O_l over all components, shape (n d, n d)."""
        size = self.n_sites * self.dim
        hessian = np.empty((size, size))
        for alpha in range(size):
            m, i = divmod(alpha, self.dim)
            for beta in range(alpha, size):
                n, j = divmod(beta, self.dim)
                hessian[alpha, beta] = hessian[beta, alpha] = float(
                    self.hessian_vector(obs, m, i, n, j).sum()
                )
        logger.debug("total_hessian", size=size)
        return hessian


def response_vector(state: ElectronicState, m: int, i: int) -> ResponseVector:
    """φ^(m) at a converged state."""
    return ResponseCalculator(state).response_vector(m, i)


def density_response(state: ElectronicState, m: int, i: int) -> NDArray[np.float64]:
    """∂ρ/∂[u(m)]_i at a converged state.

    Raises:
        StabilityError: If I - 𝓛 is singular.
    """
    return ResponseCalculator(state).density_response(m, i)


def site_gradient(state: ElectronicState, obs: Observable, site: int, m: int, i: int) -> float:
    """∂O_l/∂[u(m)]_i at a converged state."""
    return ResponseCalculator(state).site_gradient(obs, site, m, i)


def site_hessian(state: ElectronicState, obs: Observable, site: int, m: int, n: int, i: int, j: int) -> float:
    """∂²O_l/∂[u(m)]_i ∂[u(n)]_j at a converged state."""
    return ResponseCalculator(state).site_hessian(obs, site, m, n, i, j)
