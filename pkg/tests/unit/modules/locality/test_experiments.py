"""Tests for resolvent decay, locality sweeps and defect comparisons."""

from __future__ import annotations

import math

import numpy as np
import pytest

from tblocality.modules.lattice import (
    Substitution,
    Vacancy,
    apply_point_defect,
    build_chain,
)
from tblocality.modules.locality import (
    DefectBin,
    DefectComparison,
    ct_check,
    defect_comparison,
    derivative_magnitudes,
    isolated_eigenvalues,
    locality_experiment,
)
from tblocality.modules.model import Hamiltonian, TightBindingModel
from tblocality.modules.response import ResponseCalculator
from tblocality.modules.scf import ElectronicState, ScfParams, TightBindingSystem
from tblocality.modules.spectral import NearSingularError
from tests.conftest import ionic_chain_config, ionic_model


@pytest.fixture
def long_ionic_state() -> ElectronicState:
    """Zero-temperature ionic chain of 16 sites."""
    system = TightBindingSystem(
        ionic_chain_config(8), ionic_model(), mu=0.0, beta=math.inf, params=ScfParams(tol=1e-12)
    )
    return system.solve()


def _ionic_state(cells: int, beta: float) -> ElectronicState:
    """Converged ionic chain with 2 * cells sites."""
    system = TightBindingSystem(
        ionic_chain_config(cells), ionic_model(), mu=0.0, beta=beta, params=ScfParams(tol=1e-12)
    )
    return system.solve()


class TestCtCheck:
    """Tests for ct_check."""

    def test_ionic_resolvent_respects_bound(self, long_ionic_state: ElectronicState) -> None:
        """Resolvent entries decay and stay below the half-rate bound."""
        state = long_ionic_state
        report = ct_check(state.hamiltonian, state.cfg, state.u, 0.5j, 0.5)
        assert report.gamma_hat > 0.0
        assert report.violations == 0
        assert report.distance >= 0.5

    def test_diagonal_hamiltonian_has_infinite_rate(self) -> None:
        """Without off-diagonal entries nothing is left to fit."""
        h = Hamiltonian(matrix=np.diag([1.0, 2.0, 3.0]), n_sites=3, n_orbitals=1)
        report = ct_check(h, build_chain(3, 1.0), None, 0.5j, 0.5)
        assert math.isinf(report.gamma_hat)
        assert report.fit is None
        assert report.violations == 0

    def test_rejects_overstated_distance(self, ionic_state: ElectronicState) -> None:
        """A predicted distance larger than the true one is an error."""
        with pytest.raises(NearSingularError):
            ct_check(ionic_state.hamiltonian, ionic_state.cfg, None, 0.1j, 10.0)

    def test_rows_cover_every_pair(self, ionic_state: ElectronicState) -> None:
        """One CSV row per (l, k)."""
        report = ct_check(ionic_state.hamiltonian, ionic_state.cfg, None, 0.5j, 0.5)
        assert len(report.rows()) == 64
        assert report.as_dict()["z"] == [0.0, 0.5]


class TestLocalityExperiment:
    """Tests for locality_experiment."""

    def test_gradients_decay_exponentially(self, long_ionic_state: ElectronicState) -> None:
        """Site-energy gradients decay with distance in an insulator."""
        obs = long_ionic_state.system.grand_potential
        result = locality_experiment(long_ionic_state, obs, 1)
        assert result.fit.eta_hat > 0.2
        assert result.magnitudes.shape == (16, 16)

    def test_hessians_use_doubled_distance(self, long_ionic_state: ElectronicState) -> None:
        """Second derivatives are fitted against 2 r_lm and still decay."""
        obs = long_ionic_state.system.grand_potential
        result = locality_experiment(long_ionic_state, obs, 2)
        assert result.fit.eta_hat > 0.0
        assert result.distances[0, 1] == pytest.approx(2.0)

    def test_threads_do_not_change_results(self, warm_state: ElectronicState) -> None:
        """Parallel sweeps give identical magnitudes."""
        obs = warm_state.system.fermi
        serial = derivative_magnitudes(ResponseCalculator(warm_state), obs, 1, threads=1)
        parallel = derivative_magnitudes(ResponseCalculator(warm_state), obs, 1, threads=3)
        assert np.array_equal(serial, parallel)

    def test_rejects_third_order(self, warm_state: ElectronicState) -> None:
        """Only orders 1 and 2 exist."""
        with pytest.raises(ValueError, match="order"):
            derivative_magnitudes(ResponseCalculator(warm_state), warm_state.system.fermi, 3)


@pytest.mark.slow
class TestLocalityRates:
    """Tests for fitted decay rates on 40-site chains."""

    @pytest.mark.parametrize("beta", [math.inf, 20.0])
    def test_insulator_fit_is_exponential(self, beta: float) -> None:
        """Gradients of an ionic chain decay with a clean exponential envelope."""
        state = _ionic_state(20, beta)
        result = locality_experiment(state, state.system.grand_potential, 1)
        assert result.fit.eta_hat > 0.0
        assert result.fit.r_squared >= 0.9

    def test_insulator_rate_ignores_temperature(self) -> None:
        """Well below the gap, cooling from β = 20 to β = 80 barely moves the rate."""
        rates = []
        for beta in (20.0, 80.0):
            state = _ionic_state(20, beta)
            rates.append(locality_experiment(state, state.system.grand_potential, 1).fit.eta_hat)
        assert abs(rates[0] - rates[1]) <= 0.2 * rates[0]

    def test_metal_rate_falls_as_beta_doubles(self, chain_model: TightBindingModel) -> None:
        """Without a gap the rate shrinks with temperature."""
        cfg = build_chain(40, 1.0)
        rates = []
        for beta in (2.0, 4.0):
            state = TightBindingSystem(cfg, chain_model, mu=0.3, beta=beta).solve()
            rates.append(locality_experiment(state, state.system.grand_potential, 1).fit.eta_hat)
        assert rates[1] <= rates[0] + 0.05


@pytest.mark.slow
class TestDefectComparison:
    """Tests for defect_comparison."""

    def test_substitution_against_reference(self) -> None:
        """A substituted chain is compared on its far field."""
        reference_cfg = ionic_chain_config(8)
        defect_cfg = apply_point_defect(reference_cfg, Substitution(8, "B"), center=reference_cfg.sites[8])
        params = ScfParams(tol=1e-12)
        reference = TightBindingSystem(reference_cfg, ionic_model(), beta=5.0, params=params).solve()
        defect = TightBindingSystem(defect_cfg, ionic_model(), beta=5.0, params=params).solve()

        result = defect_comparison(defect, reference, reference.system.grand_potential)

        assert len(result.mapping) == 15
        assert len(result.bins) == 3
        assert result.eta_reference > 0.0
        assert result.density_deviation > 0.0
        assert result.woodbury is not None
        assert result.woodbury.woodbury_error < 1e-10
        summary = result.as_dict()
        assert summary["far_field_sites"] == 15
        assert summary["in_gap_count"] == result.in_gap_count
        assert result.pair_rows

    def test_substitution_density_decays(self) -> None:
        """|ρ - ρ_ref| falls off exponentially away from a substituted site."""
        reference_cfg = ionic_chain_config(12)
        defect_cfg = apply_point_defect(reference_cfg, Substitution(12, "B"), center=reference_cfg.sites[12])
        params = ScfParams(tol=1e-12)
        reference = TightBindingSystem(reference_cfg, ionic_model(), beta=5.0, params=params).solve()
        defect = TightBindingSystem(defect_cfg, ionic_model(), beta=5.0, params=params).solve()

        result = defect_comparison(defect, reference, reference.system.grand_potential)

        assert result.density_fit is not None
        assert result.density_fit.eta_hat > 0.0
        assert result.density_fit.r_squared >= 0.8

    def test_identical_systems(self) -> None:
        """Substituting a site by its own species changes nothing."""
        reference_cfg = ionic_chain_config(8)
        defect_cfg = apply_point_defect(reference_cfg, Substitution(8, "A"), center=reference_cfg.sites[8])
        params = ScfParams(tol=1e-12)
        reference = TightBindingSystem(reference_cfg, ionic_model(), beta=5.0, params=params).solve()
        defect = TightBindingSystem(defect_cfg, ionic_model(), beta=5.0, params=params).solve()

        result = defect_comparison(defect, reference, reference.system.grand_potential)

        assert result.in_gap_count == 0
        assert result.density_deviation <= 1e-12
        for row in result.pair_rows:
            assert row["constant"] == pytest.approx(row["reference"], rel=1e-10)
        assert all(b.relative_deviation <= 1e-10 for b in result.bins if b.n_pairs)

    def test_vacancy_in_long_chain(self) -> None:
        """A vacancy leaves few isolated levels and the far shell matches the reference."""
        reference_cfg = ionic_chain_config(30)
        defect_cfg = apply_point_defect(reference_cfg, Vacancy(30), center=reference_cfg.sites[30])
        params = ScfParams(tol=1e-12)
        reference = TightBindingSystem(reference_cfg, ionic_model(), beta=math.inf, params=params).solve()
        defect = TightBindingSystem(defect_cfg, ionic_model(), beta=math.inf, params=params).solve()

        result = defect_comparison(defect, reference, reference.system.grand_potential, bins=4)

        direct = isolated_eigenvalues(
            np.linalg.eigvalsh(defect.hamiltonian.matrix),
            np.linalg.eigvalsh(reference.hamiltonian.matrix),
            0.0,
            1e-6,
        )
        assert result.in_gap_count == direct.size
        assert result.in_gap_count <= 4
        assert len(result.bins) == 4
        assert result.far_deviation() <= 0.2


def _shells(deviations: list[float]) -> tuple[DefectBin, ...]:
    return tuple(
        DefectBin(
            lower=float(k),
            upper=float(k + 1),
            n_pairs=0 if math.isnan(d) else 4,
            mean_constant=1.0,
            mean_reference=1.0,
            relative_deviation=d,
        )
        for k, d in enumerate(deviations)
    )


def _comparison(deviations: list[float]) -> DefectComparison:
    return DefectComparison(
        mapping={},
        eta_reference=1.0,
        bins=_shells(deviations),
        convergence_fit=None,
        isolated_eigenvalues=np.zeros(0),
        density_deviation=0.0,
        density_fit=None,
    )


class TestDefectComparisonSummary:
    """Tests for the shell summaries of DefectComparison."""

    def test_shrinking_deviation_approaches_reference(self) -> None:
        """Deviations that fall outwards approach the reference."""
        comparison = _comparison([0.5, 0.1, 0.01])
        assert comparison.approaches_reference()
        assert comparison.far_deviation() == pytest.approx(0.01)

    def test_growing_deviation_does_not(self) -> None:
        """A deviation that grows in an outer shell is flagged."""
        assert not _comparison([0.1, 0.3, 0.01]).approaches_reference()

    def test_empty_shells_are_skipped(self) -> None:
        """Shells without pairs neither break the trend nor count as the far shell."""
        comparison = _comparison([0.4, math.nan, 0.2, math.nan])
        assert comparison.approaches_reference()
        assert comparison.far_deviation() == pytest.approx(0.2)
        assert comparison.as_dict()["approaches_reference"] is True
