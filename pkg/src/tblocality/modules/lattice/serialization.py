"""Plain-text configuration format.

Layout::

    # tblocality configuration
    dim 1
    periodic 0
    cell 1.0
    basis 0.0
    repeats 9
    defect_radius 1e-09
    defect_center 4.0
    sites 8
    0.0 A
    ...

``cell`` is row-major A. Header keys other than ``dim`` and ``sites`` are
optional; one ``basis`` line per unit-cell offset.
"""

from __future__ import annotations

from typing import TYPE_CHECKING

import numpy as np

from tblocality.modules.lattice.configuration import (
    Configuration,
    LatticeCell,
    LatticeError,
)

if TYPE_CHECKING:
    from collections.abc import Iterable

__all__ = [
    "dump_configuration",
    "load_configuration",
]

_HEADER = "# tblocality configuration"


def _fmt(values: Iterable[float]) -> str:
    return " ".join(repr(float(v)) for v in values)


def dump_configuration(cfg: Configuration) -> str:
    """Serialize a configuration to text."""
    lines = [_HEADER, f"dim {cfg.dim}", f"periodic {int(cfg.periodic)}"]
    if cfg.cell is not None:
        lines.append(f"cell {_fmt(cfg.cell.matrix.reshape(-1))}")
        lines.extend(f"basis {_fmt(offset)}" for offset in cfg.cell.basis)
        lines.append("repeats " + " ".join(str(r) for r in cfg.cell.repeats))
    if cfg.defect_radius is not None:
        lines.append(f"defect_radius {cfg.defect_radius!r}")
    if cfg.defect_center is not None:
        lines.append(f"defect_center {_fmt(cfg.defect_center)}")
    lines.append(f"sites {cfg.n_sites}")
    lines.extend(
        f"{_fmt(site)} {label}" for site, label in zip(cfg.sites, cfg.species, strict=True)
    )
    return "\n".join(lines) + "\n"


def load_configuration(text: str) -> Configuration:
    """Parse text produced by :func:`dump_configuration`.

    Raises:
        LatticeError: If the text is malformed.
    """
    header: dict[str, list[str]] = {}
    basis: list[list[float]] = []
    rows = [line.strip() for line in text.splitlines()]
    rows = [line for line in rows if line and not line.startswith("#")]

    n_sites: int | None = None
    body_start = 0
    for lineno, line in enumerate(rows):
        key, *values = line.split()
        if key == "sites":
            n_sites = int(values[0])
            body_start = lineno + 1
            break
        if key == "basis":
            basis.append([float(v) for v in values])
        else:
            header[key] = values
    if n_sites is None or "dim" not in header:
        raise LatticeError("Configuration text needs 'dim' and 'sites' entries")

    dim = int(header["dim"][0])
    body = rows[body_start : body_start + n_sites]
    if len(body) != n_sites:
        raise LatticeError(f"Expected {n_sites} site lines, found {len(body)}")

    sites = np.empty((n_sites, dim))
    species: list[str] = []
    for i, line in enumerate(body):
        parts = line.split()
        if len(parts) != dim + 1:
            raise LatticeError(f"Malformed site line {i}: {line!r}")
        sites[i] = [float(v) for v in parts[:dim]]
        species.append(parts[dim])

    cell = None
    if "cell" in header:
        matrix = np.asarray([float(v) for v in header["cell"]]).reshape(dim, dim)
        repeats = tuple(int(v) for v in header.get("repeats", ["1"] * dim))
        cell = LatticeCell(matrix, np.asarray(basis or [[0.0] * dim]), repeats)

    radius = header.get("defect_radius")
    center = header.get("defect_center")
    return Configuration(
        sites=sites,
        species=tuple(species),
        cell=cell,
        periodic=bool(int(header.get("periodic", ["0"])[0])),
        defect_radius=float(radius[0]) if radius else None,
        defect_center=np.asarray([float(v) for v in center]) if center else None,
    )
