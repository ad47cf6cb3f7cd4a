"""Shared test fixtures for tblocality tests."""

from __future__ import annotations

import math
import tempfile
from pathlib import Path
from typing import TYPE_CHECKING

import pytest

from tblocality.modules.lattice import build_chain, build_multilattice
from tblocality.modules.model import (
    HoppingModel,
    OnsiteKind,
    OnsiteModel,
    TightBindingModel,
)
from tblocality.modules.scf import ScfParams, TightBindingSystem

if TYPE_CHECKING:
    from collections.abc import Generator

    from tblocality.modules.lattice import Configuration
    from tblocality.modules.scf import ElectronicState

# Keeps only nearest neighbours on unit-spaced chains
NN_CUTOFF = 1.5

# Species energies of the ionic chain; the gap at μ = 0 is about 2Δ
IONIC_SPLITTING = 1.0

# Config blocks of the ionic chain; prepend an experiment line
IONIC_CONFIG_TOML = """
[geometry]
kind = "multilattice"
matrix = [[2.0]]
basis = [[0.0], [1.0]]
species = ["A", "B"]
repeats = [4]

[model]
r_cut = 1.5
onsite = "saturating"
strength = 0.3
rho0 = 0.5
species_energies = { A = 1.0, B = -1.0 }

[thermodynamics]
beta = 5.0

[solver]
tol = 1e-12
"""


def nn_hopping(**kwargs: float) -> HoppingModel:
    """Nearest-neighbour hopping with h(1) = -1."""
    return HoppingModel(h0=1.0, gamma0=1.0, r_on=1.0, r_cut=NN_CUTOFF, **kwargs)


def ionic_chain_config(cells: int = 4, *, periodic: bool = False) -> Configuration:
    """Chain alternating species A and B with unit spacing."""
    return build_multilattice(
        [[2.0]],
        [[0.0], [1.0]],
        [cells],
        periodic=periodic,
        species=["A", "B"],
    )


def ionic_model(strength: float = 0.3) -> TightBindingModel:
    """Ionic chain model with a saturating on-site term."""
    return TightBindingModel(
        hopping=nn_hopping(),
        onsite=OnsiteModel(
            kind=OnsiteKind.SATURATING,
            strength=strength,
            rho0=0.5,
            species_energies={"A": IONIC_SPLITTING, "B": -IONIC_SPLITTING},
        ),
    )


@pytest.fixture
def temp_dir() -> Generator[Path]:
    """Create a temporary directory for tests."""
    with tempfile.TemporaryDirectory() as tmpdir:
        yield Path(tmpdir)


@pytest.fixture
def chain() -> Configuration:
    """Finite chain of 10 single-species sites."""
    return build_chain(10, 1.0)


@pytest.fixture
def chain_model() -> TightBindingModel:
    """Nearest-neighbour model with a constant on-site term."""
    return TightBindingModel(hopping=nn_hopping())


@pytest.fixture
def ionic_chain() -> Configuration:
    """Ionic chain of 8 sites."""
    return ionic_chain_config(4)


@pytest.fixture
def ionic_system(ionic_chain: Configuration) -> TightBindingSystem:
    """Zero-temperature ionic chain at μ = 0."""
    return TightBindingSystem(
        ionic_chain,
        ionic_model(),
        mu=0.0,
        beta=math.inf,
        params=ScfParams(tol=1e-12),
    )


@pytest.fixture
def ionic_state(ionic_system: TightBindingSystem) -> ElectronicState:
    """Converged zero-temperature ionic state."""
    return ionic_system.solve()


@pytest.fixture
def warm_system(ionic_chain: Configuration) -> TightBindingSystem:
    """Ionic chain at β = 5."""
    return TightBindingSystem(
        ionic_chain,
        ionic_model(),
        mu=0.0,
        beta=5.0,
        params=ScfParams(tol=1e-12),
    )


@pytest.fixture
def warm_state(warm_system: TightBindingSystem) -> ElectronicState:
    """Converged β = 5 ionic state."""
    return warm_system.solve()
