"""Tests for the density map, Anderson mixing and the SCF loop."""

from __future__ import annotations

import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from tblocality.modules.lattice import Configuration, build_chain
from tblocality.modules.model import TightBindingModel
from tblocality.modules.scf import (
    AndersonMixer,
    ConvergenceError,
    ElectronicState,
    ScfParams,
    TightBindingSystem,
    density_map,
    scf_solve,
)
from tblocality.modules.spectral import ContourKind, GapError, Observable
from tests.conftest import ionic_model


class TestScfParams:
    """Tests for ScfParams validation."""

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"mixing": 0.0},
            {"mixing": 1.5},
            {"anderson_depth": -1},
            {"tol": 0.0},
            {"max_iter": 0},
        ],
    )
    def test_rejects_invalid_values(self, kwargs: dict[str, float]) -> None:
        """Out-of-range settings are refused at construction."""
        with pytest.raises(ValueError):
            ScfParams(**kwargs)  # type: ignore[arg-type]


class TestAndersonMixer:
    """Tests for AndersonMixer."""

    def test_depth_zero_is_linear_mixing(self) -> None:
        """Without history the step is (1 - α) ρ_in + α ρ_out."""
        mixer = AndersonMixer(0, damping=0.25)
        out = mixer.step(np.array([0.0, 1.0]), np.array([1.0, 0.0]))
        assert_allclose(out, [0.25, 0.75])

    def test_converges_on_linear_contraction(self) -> None:
        """Anderson mixing finds the fixed point of an affine contraction."""
        a = np.diag([0.5, -0.3, 0.2, 0.4])
        b = np.array([0.1, 0.2, -0.3, 0.4])
        expected = np.linalg.solve(np.eye(4) - a, b)
        mixer = AndersonMixer(5, damping=0.5)
        x = np.zeros(4)
        for _ in range(100):
            x = mixer.step(x, a @ x + b)
        assert_allclose(x, expected, atol=1e-8)

    def test_reset_forgets_history(self) -> None:
        """After reset the next step is linear again."""
        mixer = AndersonMixer(3, damping=0.5)
        mixer.step(np.zeros(2), np.ones(2))
        mixer.step(np.full(2, 0.5), np.full(2, 0.8))
        mixer.reset()
        assert_allclose(mixer.step(np.zeros(2), np.ones(2)), [0.5, 0.5])

    def test_rejects_bad_damping(self) -> None:
        """α must lie in (0, 1]."""
        with pytest.raises(ValueError, match="damping"):
            AndersonMixer(2, damping=0.0)


class TestScfSolve:
    """Tests for scf_solve."""

    def test_linear_model_needs_one_evaluation(self, chain: Configuration, chain_model: TightBindingModel) -> None:
        """A ρ-independent on-site term converges after one map evaluation."""
        obs = Observable.occupation(0.0, math.inf)
        density = scf_solve(chain, None, np.full(10, 0.5), chain_model, obs)
        assert density.converged
        assert density.iterations == 1
        assert density.residual == 0.0

    def test_saturating_model_reaches_fixed_point(self, ionic_state: ElectronicState) -> None:
        """The converged ρ satisfies ρ = F(ρ) to the tolerance."""
        check = density_map(
            ionic_state.cfg, None, ionic_state.rho, ionic_state.model, ionic_state.system.fermi
        )
        assert ionic_state.density.converged
        assert check.residual <= 1e-11

    def test_zero_temperature_conserves_charge(self, ionic_state: ElectronicState) -> None:
        """Half the levels of the ionic chain are filled at μ = 0."""
        assert ionic_state.rho.sum() == pytest.approx(4.0, abs=1e-10)

    def test_ionic_density_alternates(self, warm_state: ElectronicState) -> None:
        """Low-energy B sites hold more charge than A sites."""
        rho = warm_state.rho
        assert np.all(rho[1::2] > rho[0::2])
        assert np.all((rho >= 0.0) & (rho <= 1.0))

    def test_iteration_cap_raises(self, ionic_chain: Configuration) -> None:
        """Reaching max_iter raises ConvergenceError carrying the trace."""
        obs = Observable.occupation(0.0, math.inf)
        with pytest.raises(ConvergenceError) as excinfo:
            scf_solve(ionic_chain, None, np.full(8, 0.5), ionic_model(), obs, ScfParams(max_iter=1))
        assert excinfo.value.iterations == 1
        assert len(excinfo.value.trace) == 1
        assert excinfo.value.residual > 0.0

    def test_gapless_zero_temperature_raises(self, chain_model: TightBindingModel) -> None:
        """A level at μ makes the zero-temperature map undefined."""
        obs = Observable.occupation(0.0, math.inf)
        with pytest.raises(GapError):
            scf_solve(build_chain(3, 1.0), None, np.full(3, 0.5), chain_model, obs)


class TestTightBindingSystem:
    """Tests for TightBindingSystem and ElectronicState."""

    def test_initial_density_is_half_filling(self, ionic_system: TightBindingSystem) -> None:
        """Each site starts with N_b/2 electrons."""
        assert_allclose(ionic_system.initial_density(), np.full(8, 0.5))

    def test_state_is_gapped(self, ionic_state: ElectronicState) -> None:
        """The ionic chain keeps a gap at μ = 0."""
        assert ionic_state.gap() > 1.0

    def test_fermi_contour_kind_follows_beta(
        self, ionic_state: ElectronicState, warm_state: ElectronicState
    ) -> None:
        """β = ∞ uses the occupied circle, finite β the ellipse."""
        assert ionic_state.fermi_contour.kind is ContourKind.FERMI_ZERO_T
        assert warm_state.fermi_contour.kind is ContourKind.FERMI

    def test_warm_start_reuses_density(self, ionic_system: TightBindingSystem, ionic_state: ElectronicState) -> None:
        """Starting from ρ* converges immediately."""
        again = ionic_system.solve(rho0=ionic_state.rho)
        assert again.density.iterations == 1
        assert_allclose(again.rho, ionic_state.rho, atol=1e-12)
