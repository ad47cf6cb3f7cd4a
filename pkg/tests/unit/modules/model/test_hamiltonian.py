"""Tests for Hamiltonian assembly and geometric derivatives."""

from __future__ import annotations

import numpy as np
import pytest
from numpy.testing import assert_allclose

from tblocality.modules.lattice import build_chain, build_multilattice
from tblocality.modules.model import (
    GeometryError,
    HoppingModel,
    ModelError,
    OnsiteKind,
    OnsiteModel,
    TightBindingModel,
    assemble,
    gershgorin_interval,
    hamiltonian_derivative,
    hamiltonian_second_derivative,
    lattice_translations,
    linear_hamiltonian,
    spectral_bound_estimate,
)
from tests.conftest import ionic_chain_config, ionic_model, nn_hopping

STEP = 1e-6


def _square_model() -> TightBindingModel:
    return TightBindingModel(
        hopping=HoppingModel(
            h0=1.0,
            gamma0=1.2,
            r_on=1.0,
            r_cut=2.5,
            n_orbitals=2,
            orbital_coupling=((1.0, 0.3), (0.3, 0.5)),
        ),
    )


class TestAssemble:
    """Tests for assemble."""

    def test_chain_matrix(self, chain_model: TightBindingModel) -> None:
        """A unit chain with NN hopping is tridiagonal with -1 off the diagonal."""
        cfg = build_chain(4, 1.0)
        h = assemble(cfg, None, np.full(4, 0.5), chain_model)
        expected = -(np.eye(4, k=1) + np.eye(4, k=-1))
        assert_allclose(h.matrix, expected)

    def test_is_exactly_symmetric(self) -> None:
        """Assembled matrices are symmetric to the last bit."""
        cfg = build_multilattice(np.eye(2), [[0.0, 0.0]], [3, 3])
        u = 0.05 * np.random.default_rng(3).standard_normal((9, 2))
        h = assemble(cfg, u, np.full(9, 1.0), _square_model())
        assert np.array_equal(h.matrix, h.matrix.T)

    def test_species_and_onsite_on_diagonal(self) -> None:
        """The diagonal carries ε_species + v(ρ)."""
        cfg = ionic_chain_config(2)
        model = ionic_model(strength=0.3)
        rho = np.array([0.2, 0.8, 0.2, 0.8])
        h = assemble(cfg, None, rho, model)
        expected = np.array([1.0, -1.0, 1.0, -1.0]) + 0.3 * np.tanh(rho - 0.5)
        assert_allclose(np.diag(h.matrix), expected)

    def test_rejects_density_out_of_range(self, chain_model: TightBindingModel) -> None:
        """ρ must lie in [0, N_b]."""
        cfg = build_chain(3, 1.0)
        with pytest.raises(ModelError, match="outside"):
            assemble(cfg, None, [0.5, 1.2, 0.5], chain_model)

    def test_rejects_wrong_density_length(self, chain_model: TightBindingModel) -> None:
        """One density value per site."""
        with pytest.raises(ModelError, match="entries"):
            assemble(build_chain(3, 1.0), None, [0.5, 0.5], chain_model)

    def test_rejects_collapsed_geometry(self, chain_model: TightBindingModel) -> None:
        """Coinciding displaced sites are a geometry error."""
        cfg = build_chain(2, 1.0)
        with pytest.raises(GeometryError):
            assemble(cfg, [[0.5], [-0.5]], [0.5, 0.5], chain_model)

    def test_periodic_ring_closes(self, chain_model: TightBindingModel) -> None:
        """A periodic ring couples the first and last sites."""
        cfg = build_multilattice([[1.0]], [[0.0]], [5], periodic=True)
        h = assemble(cfg, None, np.full(5, 0.5), chain_model)
        assert h.matrix[0, 4] == pytest.approx(-1.0)
        assert_allclose(np.linalg.eigvalsh(h.matrix).sum(), 0.0, atol=1e-12)

    def test_index_layout(self) -> None:
        """Rows are site * N_b + orbital."""
        cfg = build_chain(3, 1.0)
        h = assemble(cfg, None, np.full(3, 1.0), _square_model())
        assert h.index(2, 1) == 5
        assert h.site_slice(1) == slice(2, 4)
        with pytest.raises(ModelError):
            h.index(3, 0)


class TestDerivatives:
    """Analytic derivatives against central differences."""

    def test_first_derivative(self) -> None:
        """∂𝓗/∂u(m)_i matches a central difference of the linear part."""
        cfg = build_multilattice(np.eye(2), [[0.0, 0.0]], [3, 3])
        model = _square_model()
        u = 0.05 * np.random.default_rng(0).standard_normal((9, 2))
        for m, i in [(0, 0), (4, 1), (8, 0)]:
            step = np.zeros_like(u)
            step[m, i] = STEP
            fd = (linear_hamiltonian(cfg, u + step, model) - linear_hamiltonian(cfg, u - step, model)) / (2 * STEP)
            assert_allclose(hamiltonian_derivative(cfg, u, model, m, i), fd, atol=1e-8)

    def test_second_derivative(self) -> None:
        """∂²𝓗/∂u(m)_i∂u(n)_j matches a difference of first derivatives."""
        cfg = build_multilattice(np.eye(2), [[0.0, 0.0]], [3, 3])
        model = _square_model()
        u = 0.05 * np.random.default_rng(1).standard_normal((9, 2))
        for m, i, n, j in [(4, 0, 4, 1), (4, 1, 5, 1), (0, 0, 8, 0)]:
            step = np.zeros_like(u)
            step[n, j] = STEP
            fd = (
                hamiltonian_derivative(cfg, u + step, model, m, i)
                - hamiltonian_derivative(cfg, u - step, model, m, i)
            ) / (2 * STEP)
            assert_allclose(hamiltonian_second_derivative(cfg, u, model, m, i, n, j), fd, atol=1e-7)

    def test_derivative_is_local(self) -> None:
        """Only rows and columns of site m are touched."""
        cfg = build_chain(6, 1.0)
        model = TightBindingModel(hopping=nn_hopping())
        d = hamiltonian_derivative(cfg, None, model, 2, 0)
        mask = np.ones_like(d, dtype=bool)
        mask[2, :] = mask[:, 2] = False
        assert np.all(d[mask] == 0.0)

    def test_rejects_bad_direction(self, chain_model: TightBindingModel) -> None:
        """Direction index must be below d."""
        with pytest.raises(ModelError, match="Direction"):
            hamiltonian_derivative(build_chain(3, 1.0), None, chain_model, 0, 1)


class TestBounds:
    """Tests for spectral bounds and image enumeration."""

    def test_gershgorin_contains_spectrum(self) -> None:
        """Every eigenvalue lies inside the Gershgorin interval."""
        cfg = ionic_chain_config(4)
        h = assemble(cfg, None, np.full(8, 0.5), ionic_model())
        lo, hi = gershgorin_interval(h)
        eigenvalues = np.linalg.eigvalsh(h.matrix)
        assert lo <= eigenvalues.min()
        assert eigenvalues.max() <= hi

    def test_bound_estimate_covers_spectral_radius(self) -> None:
        """The a-priori estimate bounds ‖𝓗‖₂."""
        cfg = ionic_chain_config(4)
        model = ionic_model()
        h = assemble(cfg, None, np.full(8, 0.5), model)
        assert np.abs(np.linalg.eigvalsh(h.matrix)).max() <= spectral_bound_estimate(cfg, None, model)

    def test_translations_include_origin(self) -> None:
        """The zero translation is always enumerated."""
        shifts = lattice_translations(np.array([[3.0]]), cutoff=1.5)
        assert any(np.allclose(s, 0.0) for s in shifts)
        assert shifts.shape[1] == 1

    def test_saturating_model_is_nonlinear(self) -> None:
        """Saturating on-site terms make 𝓗 depend on ρ."""
        cfg = build_chain(3, 1.0)
        model = TightBindingModel(
            hopping=nn_hopping(),
            onsite=OnsiteModel(kind=OnsiteKind.SATURATING, strength=1.0),
        )
        first = assemble(cfg, None, np.full(3, 0.2), model).matrix
        second = assemble(cfg, None, np.full(3, 0.8), model).matrix
        assert not np.allclose(first, second)
