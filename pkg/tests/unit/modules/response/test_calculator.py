"""Tests for analytic responses against SCF finite differences."""

from __future__ import annotations

import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from tblocality.modules.experiments import fd_checks
from tblocality.modules.lattice import Configuration
from tblocality.modules.model import TightBindingModel
from tblocality.modules.response import (
    ResponseCalculator,
    density_selector,
    fd_oracle,
    observable_selector,
    scf_quantity,
)
from tblocality.modules.scf import ElectronicState, ScfParams, TightBindingSystem
from tblocality.modules.spectral import SpectralKernels
from tests.conftest import ionic_chain_config, ionic_model

STEP = 1e-4


def _site_direction(state: ElectronicState, m: int) -> tuple[np.ndarray, np.ndarray]:
    point = state.u.reshape(-1)
    direction = np.zeros_like(point)
    direction[m * state.cfg.dim] = 1.0
    return point, direction


class TestDensityResponse:
    """Tests for ∂ρ/∂u."""

    @pytest.mark.parametrize("fixture", ["ionic_state", "warm_state"])
    def test_matches_scf_difference(self, fixture: str, request: pytest.FixtureRequest) -> None:
        """(I - 𝓛)^{-1} φ agrees with differences of re-solved densities."""
        state: ElectronicState = request.getfixturevalue(fixture)
        point, direction = _site_direction(state, 3)
        expected = fd_oracle(
            scf_quantity(state.system, density_selector(), rho0=state.rho),
            point,
            direction,
            step=STEP,
            richardson=True,
        )
        actual = ResponseCalculator(state).density_response(3, 0)
        assert_allclose(actual, expected, atol=1e-7)

    def test_conserves_charge_at_zero_temperature(self, ionic_state: ElectronicState) -> None:
        """With a gap at μ the electron count does not move."""
        response = ResponseCalculator(ionic_state).density_response(2, 0)
        assert abs(response.sum()) < 1e-10

    def test_linear_model_skips_screening(self, chain: Configuration, chain_model: TightBindingModel) -> None:
        """Without ρ dependence ∂ρ = φ."""
        state = TightBindingSystem(chain, chain_model, mu=0.0, beta=math.inf).solve()
        calc = ResponseCalculator(state)
        assert_allclose(calc.density_response(4, 0), calc.response_vector(4, 0).phi)
        assert calc.margin == pytest.approx(1.0)

    def test_rejects_unknown_component(self, warm_state: ElectronicState) -> None:
        """(m, i) must exist."""
        with pytest.raises(IndexError):
            ResponseCalculator(warm_state).density_response(8, 0)


class TestSiteGradient:
    """Tests for ∂O_l/∂u and the gradient table."""

    def test_grand_potential_gradient_matches_difference(self, warm_state: ElectronicState) -> None:
        """Site grand-potential gradients agree with re-solved differences."""
        obs = warm_state.system.grand_potential
        point, direction = _site_direction(warm_state, 5)
        expected = fd_oracle(
            scf_quantity(warm_state.system, observable_selector(obs), rho0=warm_state.rho),
            point,
            direction,
            step=STEP,
            richardson=True,
        )
        actual = ResponseCalculator(warm_state).gradient_vector(obs, 5, 0)
        assert_allclose(actual, expected, atol=1e-7)

    def test_sum_rule(self, warm_state: ElectronicState) -> None:
        """Rigid translations do not change any O_l."""
        table = ResponseCalculator(warm_state).gradient_table(warm_state.system.grand_potential)
        assert table.sum_rule_residual() < 1e-9

    def test_table_rows(self, warm_state: ElectronicState) -> None:
        """One row per (l, m, i) with its pair distance."""
        table = ResponseCalculator(warm_state).gradient_table(warm_state.system.fermi)
        rows = table.rows()
        assert len(rows) == 8 * 8
        assert rows[1]["r"] == pytest.approx(1.0)
        assert set(rows[0]) == {"l", "m", "i", "value", "r"}

    def test_total_gradient_is_column_sum(self, warm_state: ElectronicState) -> None:
        """∂(Σ_l O_l)/∂u(m) sums the table over l."""
        calc = ResponseCalculator(warm_state)
        obs = warm_state.system.grand_potential
        total = calc.total_gradient(obs)
        assert total.shape == (8, 1)
        assert total[2, 0] == pytest.approx(calc.gradient_vector(obs, 2, 0).sum())


class TestSecondOrder:
    """Tests for ∂²O_l/∂u∂u."""

    def test_mixed_hessian_is_symmetric(self, warm_state: ElectronicState) -> None:
        """Swapping (m, i) and (n, j) gives the same second derivative."""
        calc = ResponseCalculator(warm_state)
        obs = warm_state.system.grand_potential
        assert_allclose(
            calc.hessian_vector(obs, 2, 0, 3, 0),
            calc.hessian_vector(obs, 3, 0, 2, 0),
            atol=1e-10,
        )

    def test_total_hessian_is_symmetric(self, warm_state: ElectronicState) -> None:
        """The assembled Hessian is symmetric."""
        hessian = ResponseCalculator(warm_state).total_hessian(warm_state.system.grand_potential)
        assert hessian.shape == (8, 8)
        assert_allclose(hessian, hessian.T)

    @pytest.mark.parametrize("fixture", ["ionic_state", "warm_state"])
    def test_fd_checks_pass(self, fixture: str, request: pytest.FixtureRequest) -> None:
        """Every finite-difference comparison stays within tolerance."""
        state: ElectronicState = request.getfixturevalue(fixture)
        checks = fd_checks(state, state.system.grand_potential)
        failed = [c.as_dict() for c in checks if not c.passed]
        assert not failed


@pytest.fixture
def cold_state() -> ElectronicState:
    """40-site ionic chain at β = 1000, beyond what the Fermi ellipse can resolve."""
    cfg = ionic_chain_config(20)
    return TightBindingSystem(cfg, ionic_model(), mu=0.0, beta=1000.0, params=ScfParams(tol=1e-12)).solve()


class TestUnresolvedContour:
    """Tests for responses that fall back to exact eigenbasis kernels."""

    def test_no_fermi_contour(self, cold_state: ElectronicState) -> None:
        """The node count needed at β = 1000 is refused."""
        assert cold_state.fermi_contour is None

    def test_uses_exact_kernels(self, cold_state: ElectronicState) -> None:
        """Kernels come from divided differences instead of quadrature."""
        calc = ResponseCalculator(cold_state)
        assert isinstance(calc.kernels(cold_state.system.fermi), SpectralKernels)

    def test_density_response_matches_scf_difference(self, cold_state: ElectronicState) -> None:
        """The exact-kernel response still agrees with re-solved densities."""
        point, direction = _site_direction(cold_state, 20)
        expected = fd_oracle(
            scf_quantity(cold_state.system, density_selector(), rho0=cold_state.rho),
            point,
            direction,
            step=STEP,
            richardson=True,
        )
        actual = ResponseCalculator(cold_state).density_response(20, 0)
        assert_allclose(actual, expected, atol=1e-7)

    def test_stability_margin_is_positive(self, cold_state: ElectronicState) -> None:
        """The stability operator is assembled without a contour."""
        assert cold_state.stability.margin > 0
