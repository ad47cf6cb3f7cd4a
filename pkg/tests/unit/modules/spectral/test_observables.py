"""Tests for observables, eigendecomposition and spectral gaps."""

from __future__ import annotations

import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from tblocality.modules.model import Hamiltonian, assemble
from tblocality.modules.spectral import (
    DomainError,
    GapError,
    NumericalError,
    Observable,
    diagonalize,
    fermi,
    grand_potential_integrand,
    local_observables_spectral,
    spectral_gap,
)
from tests.conftest import ionic_chain_config, ionic_model


def _ionic_hamiltonian() -> Hamiltonian:
    return assemble(ionic_chain_config(4), None, np.full(8, 0.5), ionic_model())


class TestFermi:
    """Tests for fermi and the grand-potential integrand."""

    def test_half_occupied_at_mu(self) -> None:
        """f(μ) = 1/2 at any temperature."""
        assert float(fermi(0.3, 0.3, 5.0)) == pytest.approx(0.5)
        assert float(fermi(0.3, 0.3, math.inf)) == 0.5

    def test_zero_temperature_is_a_step(self) -> None:
        """β = ∞ gives 1 below μ and 0 above."""
        assert_allclose(fermi([-1.0, 1.0], 0.0, math.inf), [1.0, 0.0])

    def test_no_overflow_far_from_mu(self) -> None:
        """Large β|z - μ| stays finite."""
        values = fermi([-1e3, 1e3], 0.0, 100.0)
        assert_allclose(values, [1.0, 0.0])

    def test_rejects_matsubara_pole(self) -> None:
        """μ + iπ/β is a pole."""
        with pytest.raises(DomainError, match="pole"):
            fermi(np.array([1j * math.pi / 5.0]), 0.0, 5.0)

    def test_rejects_complex_at_zero_temperature(self) -> None:
        """The zero-temperature step has no continuation off the axis."""
        with pytest.raises(DomainError):
            fermi(np.array([0.1 + 0.2j]), 0.0, math.inf)

    def test_grand_potential_derivative_is_twice_occupation(self) -> None:
        """d𝔤/dz = 2 f(z - μ)."""
        x = np.array([-1.0, -0.1, 0.4, 2.0])
        h = 1e-6
        fd = (grand_potential_integrand(x + h, 0.1, 5.0) - grand_potential_integrand(x - h, 0.1, 5.0)) / (2 * h)
        assert_allclose(fd, 2.0 * fermi(x, 0.1, 5.0), atol=1e-8)

    def test_grand_potential_zero_temperature_limit(self) -> None:
        """At β = ∞ the integrand is 2(z - μ) below μ and 0 above."""
        assert_allclose(grand_potential_integrand([-1.0, 1.0], 0.0, math.inf), [-2.0, 0.0])


class TestObservable:
    """Tests for Observable."""

    def test_polynomial_needs_coefficients(self) -> None:
        """An empty polynomial is rejected."""
        with pytest.raises(ValueError, match="coefficients"):
            Observable.polynomial(())

    def test_rejects_nonpositive_beta(self) -> None:
        """β must be positive."""
        with pytest.raises(ValueError, match="beta"):
            Observable.occupation(0.0, 0.0)

    def test_occupation_derivative(self) -> None:
        """f' = -β f (1 - f) at finite β."""
        obs = Observable.occupation(0.0, 4.0)
        x = np.array([-0.5, 0.0, 0.7])
        h = 1e-6
        fd = (obs.real_values(x + h) - obs.real_values(x - h)) / (2 * h)
        assert_allclose(obs.derivative(x), fd, atol=1e-8)

    @pytest.mark.parametrize(
        "obs",
        [
            Observable.occupation(0.0, 4.0),
            Observable.grand_potential(0.2, 3.0),
            Observable.polynomial((1.0, -2.0, 0.5, 1.0)),
        ],
    )
    def test_second_derivative(self, obs: Observable) -> None:
        """𝔬'' agrees with central differences of 𝔬'."""
        x = np.array([-0.8, 0.1, 0.6])
        h = 1e-5
        fd = (obs.derivative(x + h) - obs.derivative(x - h)) / (2 * h)
        assert_allclose(obs.second_derivative(x), fd, atol=1e-7)

    def test_zero_temperature_flags(self) -> None:
        """Polynomials never count as zero-temperature observables."""
        assert Observable.occupation(0.0, math.inf).zero_temperature
        assert not Observable.occupation(0.0, 2.0).zero_temperature
        assert not Observable.polynomial((1.0,)).zero_temperature


class TestDiagonalize:
    """Tests for diagonalize and site weights."""

    def test_eigenvectors_are_orthonormal(self) -> None:
        """Ψᵀ Ψ = I."""
        spec = diagonalize(_ionic_hamiltonian())
        assert_allclose(spec.eigenvectors.T @ spec.eigenvectors, np.eye(8), atol=1e-12)

    def test_site_weights_are_a_partition(self) -> None:
        """Each eigenvector's weight sums to 1 over sites."""
        spec = diagonalize(_ionic_hamiltonian())
        assert_allclose(spec.site_weights.sum(axis=0), np.ones(8), atol=1e-12)

    def test_rejects_nonfinite_matrix(self) -> None:
        """NaN entries are a numerical error."""
        bad = Hamiltonian(matrix=np.array([[np.nan]]), n_sites=1, n_orbitals=1)
        with pytest.raises(NumericalError):
            diagonalize(bad)

    def test_local_occupations_count_electrons(self) -> None:
        """Σ_l ρ_l equals the number of occupied levels at β = ∞."""
        spec = diagonalize(_ionic_hamiltonian())
        rho = local_observables_spectral(spec, Observable.occupation(0.0, math.inf))
        assert rho.sum() == pytest.approx(float(np.sum(spec.eigenvalues < 0)))

    def test_identity_polynomial_gives_diagonal(self) -> None:
        """𝔬(z) = z gives O_l = 𝓗_ll."""
        h = _ionic_hamiltonian()
        values = local_observables_spectral(diagonalize(h), Observable.polynomial((0.0, 1.0)))
        assert_allclose(values, np.diag(h.matrix), atol=1e-12)


class TestSpectralGap:
    """Tests for spectral_gap."""

    def test_gap_around_mu(self) -> None:
        """Gap, edges and crossing of a split spectrum."""
        info = spectral_gap(np.array([-2.0, -1.0, 1.0, 3.0]), 0.0)
        assert info.gap == pytest.approx(2.0)
        assert info.lower == -1.0
        assert info.upper == 1.0
        assert info.crossing == pytest.approx(0.0)
        assert info.distance_to_mu == pytest.approx(1.0)

    def test_eigenvalue_at_mu_closes_gap(self) -> None:
        """An eigenvalue at μ gives gap 0 and require() fails."""
        info = spectral_gap(np.array([-1.0, 0.0, 1.0]), 0.0)
        assert info.gap == 0.0
        with pytest.raises(GapError):
            info.require(0.0)

    def test_all_levels_empty(self) -> None:
        """With nothing below μ there is no occupied-states crossing."""
        info = spectral_gap(np.array([1.0, 2.0]), 0.0)
        assert info.lower is None
        assert info.crossing is None
        assert info.gap == pytest.approx(2.0)

    def test_all_levels_occupied(self) -> None:
        """With nothing above μ the occupied contour crosses at μ."""
        info = spectral_gap(np.array([-3.0, -1.0]), 0.0)
        assert info.upper is None
        assert info.crossing == pytest.approx(0.0)
