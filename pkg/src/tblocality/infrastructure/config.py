"""Experiment configuration: TOML files validated by pydantic models.

Unknown keys are rejected. Errors carry the dotted key path and, when it can
be located, the line of the offending key in the source file.
"""

from __future__ import annotations

import math
import re
import tomllib
from enum import StrEnum
from pathlib import Path
from typing import TYPE_CHECKING, Annotated, Any, Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from tblocality.modules.lattice import (
    Interstitial,
    LatticeError,
    LatticeCell,
    Substitution,
    Vacancy,
    apply_point_defect,
    build_chain,
    build_multilattice,
)
from tblocality.modules.model import (
    HoppingModel,
    OnsiteKind,
    OnsiteModel,
    PairRepulsion,
    TightBindingModel,
)
from tblocality.modules.scf import ScfParams

if TYPE_CHECKING:
    from collections.abc import Callable, Sequence

    from tblocality.modules.lattice import Configuration

__all__ = [
    "ConfigError",
    "DefectConfig",
    "ExperimentConfig",
    "ExperimentKind",
    "GeometryConfig",
    "ModelConfig",
    "OptionsConfig",
    "SolverConfig",
    "ThermodynamicsConfig",
    "apply_overrides",
    "load_config",
    "parse_config",
]

# Maximum config file size (1MB)
MAX_CONFIG_SIZE = 1 * 1024 * 1024

_TOML_POSITION = re.compile(r"line (\d+)")


class ConfigError(Exception):
    """Invalid configuration.

    Attributes:
        key: Dotted path of the offending key, if known.
        line: 1-based line in the source file, if known.
    """

    def __init__(self, message: str, *, key: str | None = None, line: int | None = None) -> None:
        super().__init__(message)
        self.key = key
        self.line = line


class ExperimentKind(StrEnum):
    """Experiments the runner can dispatch."""

    LOCALITY = "locality"
    CT = "ct"
    DEFECT_COMPARE = "defect-compare"
    BANDS = "bands"
    RELAX = "relax"
    BETA_LIMIT = "beta-limit"
    SELFCHECK = "selfcheck"


class _Block(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class DefectConfig(_Block):
    """One point-defect edit."""

    kind: Literal["vacancy", "interstitial", "substitution"]
    site: int | None = Field(default=None, ge=0)
    position: list[float] | None = None
    species: str | None = None

    @model_validator(mode="after")
    def _check_fields(self) -> DefectConfig:
        if self.kind in ("vacancy", "substitution") and self.site is None:
            raise ValueError(f"{self.kind} needs 'site'")
        if self.kind == "substitution" and self.species is None:
            raise ValueError("substitution needs 'species'")
        if self.kind == "interstitial" and self.position is None:
            raise ValueError("interstitial needs 'position'")
        return self

    def edit(
        self,
        site_map: Callable[[int], int] | None = None,
        shift: Sequence[float] | None = None,
    ) -> Vacancy | Interstitial | Substitution:
        """Lattice edit, with site indices and positions moved into a grown lattice."""
        if self.kind == "interstitial":
            assert self.position is not None
            offset = shift if shift is not None else [0.0] * len(self.position)
            position = tuple(p + s for p, s in zip(self.position, offset, strict=True))
            return Interstitial(position, self.species or "A")
        assert self.site is not None
        site = site_map(self.site) if site_map is not None else self.site
        if self.kind == "vacancy":
            return Vacancy(site)
        assert self.species is not None
        return Substitution(site, self.species)


class GeometryConfig(_Block):
    """Reference lattice and defect edits."""

    kind: Literal["chain", "multilattice"] = "chain"
    n: int = Field(default=40, ge=1)
    a: float = Field(default=1.0, gt=0)
    matrix: list[list[float]] | None = None
    basis: list[list[float]] | None = None
    species: list[str] = Field(default_factory=lambda: ["A"])
    repeats: list[Annotated[int, Field(ge=1)]] | None = None
    periodic: bool = False
    defects: list[DefectConfig] = Field(default_factory=list)
    defect_radius: float | None = Field(default=None, gt=0)

    @model_validator(mode="after")
    def _check_lattice(self) -> GeometryConfig:
        if self.kind == "multilattice":
            if self.matrix is None or self.basis is None or self.repeats is None:
                raise ValueError("multilattice needs 'matrix', 'basis' and 'repeats'")
            if len(self.species) != len(self.basis):
                raise ValueError(f"{len(self.species)} species for {len(self.basis)} basis sites")
        elif len(self.species) != 1:
            raise ValueError("chain takes a single species")
        return self

    @model_validator(mode="after")
    def _check_defects(self) -> GeometryConfig:
        if not self.defects:
            return self
        try:
            self.build()
        except LatticeError as e:
            raise ValueError(f"defects: {e}") from e
        return self

    def unit_cell(self) -> tuple[LatticeCell, tuple[str, ...]]:
        """Unit cell and basis species of the reference lattice."""
        if self.kind == "chain":
            return LatticeCell([[self.a]], [[0.0]], (1,)), tuple(self.species)
        assert self.matrix is not None and self.basis is not None
        dim = len(self.matrix)
        return LatticeCell(self.matrix, self.basis, (1,) * dim), tuple(self.species)

    def reference(self, size: int | None = None) -> Configuration:
        """Defect-free configuration, optionally with ``size`` cells per axis."""
        if self.kind == "chain" and not self.periodic:
            return build_chain(size or self.n, self.a, species=self.species[0])
        if self.kind == "chain":
            return build_multilattice([[self.a]], [[0.0]], [size or self.n], periodic=True, species=self.species)
        assert self.matrix is not None and self.basis is not None and self.repeats is not None
        repeats = self.repeats if size is None else [size] * len(self.repeats)
        return build_multilattice(
            self.matrix,
            self.basis,
            repeats,
            periodic=self.periodic,
            species=self.species,
        )

    def _repeats(self, size: int | None) -> list[int]:
        if self.kind == "chain":
            return [size or self.n]
        assert self.repeats is not None
        return list(self.repeats) if size is None else [size] * len(self.repeats)

    def build(self, size: int | None = None) -> Configuration:
        """Reference configuration with the defect edits applied.

        With ``size`` the lattice grows symmetrically and the edits move with
        the cells they were declared in, so the defect stays centred.
        """
        cfg = self.reference(size)
        if not self.defects:
            return cfg
        old, new = self._repeats(None), self._repeats(size)
        cells = [(m - r) // 2 for r, m in zip(old, new, strict=True)]
        cell, _ = self.unit_cell()
        n_basis = cell.n_basis

        def site_map(site: int) -> int:
            index, offset = divmod(site, n_basis)
            coords = np.unravel_index(index, old)
            moved = [int(c) + s for c, s in zip(coords, cells, strict=True)]
            return int(np.ravel_multi_index(moved, new)) * n_basis + offset

        shift = (cell.matrix @ np.asarray(cells, dtype=float)).tolist()
        edits = [d.edit(site_map, shift) for d in self.defects]
        return apply_point_defect(cfg, edits, max_radius=self.defect_radius)


class ModelConfig(_Block):
    """Hopping, on-site and repulsion parameters."""

    h0: float = Field(default=1.0, gt=0)
    gamma0: float = Field(default=1.0, gt=0)
    r_on: float = 1.0
    r_cut: float | None = Field(default=None, gt=0)
    n_orbitals: int = Field(default=1, ge=1)
    onsite: OnsiteKind = OnsiteKind.CONSTANT
    constant: float = 0.0
    strength: float = 0.0
    rho0: float = 0.0
    species_energies: dict[str, float] = Field(default_factory=dict)
    repulsion_strength: float = Field(default=0.0, ge=0)
    repulsion_length: float = Field(default=0.25, gt=0)

    def build(self) -> TightBindingModel:
        return TightBindingModel(
            hopping=HoppingModel(
                h0=self.h0,
                gamma0=self.gamma0,
                r_on=self.r_on,
                n_orbitals=self.n_orbitals,
                r_cut=self.r_cut,
            ),
            onsite=OnsiteModel(
                kind=self.onsite,
                constant=self.constant,
                strength=self.strength,
                rho0=self.rho0,
                species_energies=dict(self.species_energies),
            ),
            repulsion=PairRepulsion(strength=self.repulsion_strength, length=self.repulsion_length),
        )


class ThermodynamicsConfig(_Block):
    """Inverse temperature and chemical potential.

    ``beta = "inf"`` selects zero temperature and requires ``expect_gap``.
    """

    beta: float = Field(default=20.0, gt=0)
    mu: float = 0.0
    expect_gap: bool = False

    @field_validator("beta", mode="before")
    @classmethod
    def _parse_beta(cls, value: Any) -> Any:
        if isinstance(value, str):
            if value.strip().lower() == "inf":
                return math.inf
            raise ValueError(f"expected a positive number or 'inf', got {value!r}")
        return value

    @model_validator(mode="after")
    def _check_zero_temperature(self) -> ThermodynamicsConfig:
        if math.isinf(self.beta) and not self.expect_gap:
            raise ValueError("beta = 'inf' needs expect_gap = true")
        return self

    @property
    def zero_temperature(self) -> bool:
        return math.isinf(self.beta)


class SolverConfig(_Block):
    """SCF and contour settings."""

    mixing: float = Field(default=0.5, gt=0, le=1)
    anderson_depth: int = Field(default=5, ge=0)
    tol: float = Field(default=1e-10, gt=0)
    max_iter: int = Field(default=200, ge=1)
    n_quad: int = Field(default=64, ge=8)
    margin: float = Field(default=0.5, gt=0)

    def params(self) -> ScfParams:
        return ScfParams(
            mixing=self.mixing,
            anderson_depth=self.anderson_depth,
            tol=self.tol,
            max_iter=self.max_iter,
        )


class OptionsConfig(_Block):
    """Experiment-specific knobs; each experiment reads the ones it needs."""

    order: Literal[1, 2] = 1
    window: tuple[float, float] | None = None
    observable: Literal["energy", "density"] = "energy"
    ct_distances: list[Annotated[float, Field(gt=0)]] = Field(default_factory=lambda: [1.0, 4.0])
    bins: int = Field(default=3, ge=1)
    delta: float = Field(default=1e-6, gt=0)
    reference_size: int | None = Field(default=None, ge=1)
    grid: int = Field(default=16, ge=8)
    supercell: int = Field(default=16, ge=1)
    supercell_sweep: list[Annotated[int, Field(ge=1)]] = Field(default_factory=lambda: [4, 8, 16])
    betas: list[Annotated[float, Field(gt=0)]] = Field(default_factory=lambda: [10.0, 20.0, 40.0, 80.0])
    relax_tol: float = Field(default=1e-8, gt=0)
    relax_max_iter: int = Field(default=200, ge=0)
    m_min: float = Field(default=0.5, gt=0, le=1)
    free_radius: float | None = Field(default=None, gt=0)
    upsilon: float = Field(default=1.0, gt=0)
    rattle: float = Field(default=0.0, ge=0)


class ExperimentConfig(_Block):
    """Complete, validated run configuration."""

    experiment: ExperimentKind
    seed: int = Field(default=0, ge=0, lt=2**64)
    threads: int | None = Field(default=None, ge=1)
    output_dir: Path | None = None
    geometry: GeometryConfig = Field(default_factory=GeometryConfig)
    model: ModelConfig = Field(default_factory=ModelConfig)
    thermodynamics: ThermodynamicsConfig = Field(default_factory=ThermodynamicsConfig)
    solver: SolverConfig = Field(default_factory=SolverConfig)
    options: OptionsConfig = Field(default_factory=OptionsConfig)


def _override_value(raw: str) -> Any:
    try:
        return tomllib.loads(f"value = {raw}")["value"]
    except tomllib.TOMLDecodeError:
        return raw


def apply_overrides(data: dict[str, Any], overrides: Sequence[str]) -> dict[str, Any]:
    """Merge ``key.path=value`` overrides into parsed TOML data.

    Values are parsed as TOML, falling back to bare strings.

    Raises:
        ConfigError: If an override is malformed or descends into a non-table.
    """
    merged = _deep_copy(data)
    for item in overrides:
        key, sep, raw = item.partition("=")
        key = key.strip()
        if not sep or not key:
            raise ConfigError(f"Override must look like key=value, got {item!r}", key=key or None)
        parts = key.split(".")
        node = merged
        for part in parts[:-1]:
            child = node.setdefault(part, {})
            if not isinstance(child, dict):
                raise ConfigError(f"Cannot override inside non-table key {part!r}", key=key)
            node = child
        node[parts[-1]] = _override_value(raw.strip())
    return merged


def _deep_copy(data: dict[str, Any]) -> dict[str, Any]:
    return {k: _deep_copy(v) if isinstance(v, dict) else v for k, v in data.items()}


def _key_line(text: str, loc: Sequence[int | str]) -> int | None:
    names = [str(part) for part in loc if isinstance(part, str)]
    if not names:
        return None
    pattern = re.compile(rf"^\s*{re.escape(names[-1])}\s*=", re.MULTILINE)
    match = pattern.search(text)
    if match is None:
        header = re.compile(rf"^\s*\[+\s*{re.escape('.'.join(names))}\s*[\].]", re.MULTILINE)
        match = header.search(text)
    return text.count("\n", 0, match.start()) + 1 if match else None


def parse_config(text: str, overrides: Sequence[str] = ()) -> ExperimentConfig:
    """Validate TOML text plus overrides.

    Raises:
        ConfigError: On TOML syntax errors or schema violations.
    """
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as e:
        match = _TOML_POSITION.search(str(e))
        raise ConfigError(f"Invalid TOML: {e}", line=int(match.group(1)) if match else None) from e

    data = apply_overrides(data, overrides)
    try:
        return ExperimentConfig.model_validate(data)
    except ValidationError as e:
        first = e.errors()[0]
        loc = first["loc"]
        key = ".".join(str(part) for part in loc) or None
        line = _key_line(text, loc)
        where = f" (line {line})" if line else ""
        raise ConfigError(f"{key or 'config'}: {first['msg']}{where}", key=key, line=line) from e


def load_config(path: Path, overrides: Sequence[str] = ()) -> ExperimentConfig:
    """Read and validate a TOML config file.

    Raises:
        ConfigError: If the file cannot be read or fails validation.
    """
    try:
        size = path.stat().st_size
        if size > MAX_CONFIG_SIZE:
            raise ConfigError(f"Config file too large ({size} bytes)")
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"Cannot read config {path}: {e}") from e
    return parse_config(text, overrides)
