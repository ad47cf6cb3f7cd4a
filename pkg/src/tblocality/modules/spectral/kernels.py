"""Eigenbasis kernels of contour integrals of resolvent products.

With d_s(z) = 1 / (λ_s - z) and g_q = w_q 𝔬(z_q) / (2πi):

    K0_s   = -Σ_q g_q d_s
    K1_st  =  Σ_q g_q d_s d_t
    K2_str = -Σ_q g_q d_s d_t d_r

so that, for a perturbation X with eigenbasis form X̃ = Ψᵀ X Ψ,

    O_l           = Σ_s   P_l[s,s] K0_s
    δO_l[X]       = Σ_st  P_l[s,t] X̃_st K1_st
    δ²O_l[X, Y]   = Σ_str P_l[r,s] (X̃_st Ỹ_tr + Ỹ_st X̃_tr) K2_str

where P_l[s,t] = Σ_a ψ_s(la) ψ_t(la).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import TYPE_CHECKING

import numpy as np

from tblocality.modules.spectral.errors import NumericalError

if TYPE_CHECKING:
    from numpy.typing import NDArray

    from tblocality.modules.spectral.contour import Contour
    from tblocality.modules.spectral.eigen import SpectralCache
    from tblocality.modules.spectral.observables import Observable

__all__ = [
    "ContourKernels",
    "SpectralKernels",
    "divided_differences",
    "second_divided_differences",
]

_IMAG_TOL = 1e-8

# Eigenvalue pairs closer than this use the derivative
_DEGENERATE = 1e-10

# Quadrature nodes per block when accumulating K2
_CHUNK = 256


def _real(values: NDArray[np.complex128], name: str) -> NDArray[np.float64]:
    if values.size:
        scale = max(1.0, float(np.abs(values.real).max()))
        imag = float(np.abs(values.imag).max())
        if imag > _IMAG_TOL * scale:
            raise NumericalError(f"Kernel {name} has imaginary residual {imag:.3e} (scale {scale:.3e})")
    return np.ascontiguousarray(values.real)


@dataclass(frozen=True, eq=False)
class ContourKernels:
    """Quadrature kernels of one observable on one contour.

    Attributes:
        eigenvalues: Spectrum the kernels are expanded in.
        d: Matrix d[q, s] = 1 / (λ_s - z_q).
        g: Node factors w_q 𝔬(z_q) / (2πi).
    """

    eigenvalues: NDArray[np.float64]
    d: NDArray[np.complex128]
    g: NDArray[np.complex128]

    @classmethod
    def build(cls, spec: SpectralCache, obs: Observable, contour: Contour) -> ContourKernels:
        """Kernels for ``obs`` integrated over ``contour``."""
        lam = np.asarray(spec.eigenvalues)
        d = 1.0 / (lam[np.newaxis, :] - contour.nodes[:, np.newaxis])
        g = contour.weights * obs.on_contour(contour.nodes) / (2j * np.pi)
        return cls(eigenvalues=lam, d=d, g=np.asarray(g))

    @cached_property
    def k0(self) -> NDArray[np.float64]:
        """Zeroth-order kernel, equal to 𝔬(λ_s) for enclosed levels."""
        return _real(-(self.g @ self.d), "k0")

    @cached_property
    def k1(self) -> NDArray[np.float64]:
        """First-order kernel (divided differences of 𝔬)."""
        gd = self.g[:, np.newaxis] * self.d
        return _real(gd.T @ self.d, "k1")

    @cached_property
    def k2(self) -> NDArray[np.float64]:
        """Second-order kernel K2[s, t, r]."""
        n = self.eigenvalues.size
        k2 = np.zeros((n, n, n), dtype=complex)
        for start in range(0, self.g.size, _CHUNK):
            block = slice(start, start + _CHUNK)
            gd = self.g[block, np.newaxis] * self.d[block]
            k2 -= np.einsum("qs,qt,qr->str", gd, self.d[block], self.d[block], optimize=True)
        return _real(k2, "k2")


def divided_differences(spec: SpectralCache, obs: Observable) -> NDArray[np.float64]:
    """First divided differences [𝔬(λ_s) - 𝔬(λ_t)] / (λ_s - λ_t) on the real spectrum.

    Degenerate pairs use 𝔬'(λ_s). Provides an exact check of ``ContourKernels.k1``.
    """
    lam = np.asarray(spec.eigenvalues)
    values = obs.real_values(lam)
    diff = lam[:, np.newaxis] - lam[np.newaxis, :]
    close = np.abs(diff) < _DEGENERATE
    safe = np.where(close, 1.0, diff)
    dd = (values[:, np.newaxis] - values[np.newaxis, :]) / safe
    deriv = obs.derivative(lam)
    return np.where(close, 0.5 * (deriv[:, np.newaxis] + deriv[np.newaxis, :]), dd)


def second_divided_differences(
    spec: SpectralCache, obs: Observable, first: NDArray[np.float64] | None = None
) -> NDArray[np.float64]:
    """Second divided differences 𝔬[λ_s, λ_t, λ_r] on the real spectrum.

    Uses whichever pair of the triple is separated; fully degenerate triples
    use 𝔬''/2.
    """
    lam = np.asarray(spec.eigenvalues)
    k1 = divided_differences(spec, obs) if first is None else first
    ls = lam[:, np.newaxis, np.newaxis]
    lt = lam[np.newaxis, :, np.newaxis]
    lr = lam[np.newaxis, np.newaxis, :]
    k_st = k1[:, :, np.newaxis]
    k_tr = k1[np.newaxis, :, :]
    k_sr = k1[:, np.newaxis, :]

    sr = ls - lr
    tr = lt - lr
    sr_open = np.abs(sr) >= _DEGENERATE
    tr_open = np.abs(tr) >= _DEGENERATE
    by_sr = (k_st - k_tr) / np.where(sr_open, sr, 1.0)
    by_tr = (k_st - k_sr) / np.where(tr_open, tr, 1.0)
    curvature = 0.5 * obs.second_derivative(lam)
    flat = np.broadcast_to(curvature[:, np.newaxis, np.newaxis], by_sr.shape)
    return np.where(sr_open, by_sr, np.where(tr_open, by_tr, flat))


@dataclass(frozen=True, eq=False)
class SpectralKernels:
    """Exact eigenbasis kernels of one observable, with no contour.

    K0, K1 and K2 are the divided differences of 𝔬 of orders zero to two,
    which is what the contour quadrature converges to when the contour
    encloses the whole spectrum. Used when the quadrature would need more
    nodes than ``MAX_NODES``.

    Attributes:
        eigenvalues: Spectrum the kernels are expanded in.
        observable: Observable the kernels belong to.
        spec: Eigenpairs the divided differences are taken on.
    """

    eigenvalues: NDArray[np.float64]
    observable: Observable
    spec: SpectralCache

    @classmethod
    def build(cls, spec: SpectralCache, obs: Observable) -> SpectralKernels:
        """Kernels of ``obs`` on the spectrum of ``spec``."""
        return cls(eigenvalues=np.asarray(spec.eigenvalues), observable=obs, spec=spec)

    @cached_property
    def k0(self) -> NDArray[np.float64]:
        """𝔬(λ_s)."""
        return self.observable.real_values(self.eigenvalues)

    @cached_property
    def k1(self) -> NDArray[np.float64]:
        """𝔬[λ_s, λ_t]."""
        return divided_differences(self.spec, self.observable)

    @cached_property
    def k2(self) -> NDArray[np.float64]:
        """𝔬[λ_s, λ_t, λ_r]."""
        return np.ascontiguousarray(second_divided_differences(self.spec, self.observable, self.k1))
