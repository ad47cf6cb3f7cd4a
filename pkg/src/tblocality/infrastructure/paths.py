"""Output layout of an experiment run."""

from __future__ import annotations

import re
from pathlib import Path

__all__ = [
    "InvalidNameError",
    "OutputLayout",
    "default_output_dir",
]


class InvalidNameError(ValueError):
    """Raised when a table name is unsafe as a file name."""


# Table names become file names: no separators, no ..
_VALID_NAME_PATTERN = re.compile(r"^[a-zA-Z0-9][a-zA-Z0-9_-]*$")


def _validate_name(name: str) -> None:
    if not _VALID_NAME_PATTERN.match(name) or len(name) > 100:
        raise InvalidNameError(
            f"Invalid table name '{name}'. Names must start with alphanumeric "
            "and contain only letters, numbers, hyphens, and underscores."
        )


class OutputLayout:
    """Resolves paths inside a run directory.

    Layout:
        <root>/
        ├── summary.json
        ├── summary.md
        ├── configuration.txt
        └── <table>.csv
    """

    def __init__(self, root: Path) -> None:
        self.root = root

    def ensure_root(self) -> Path:
        """Create the run directory and return it."""
        self.root.mkdir(parents=True, exist_ok=True)
        return self.root

    def summary_json(self) -> Path:
        return self.root / "summary.json"

    def summary_md(self) -> Path:
        return self.root / "summary.md"

    def configuration(self) -> Path:
        return self.root / "configuration.txt"

    def table(self, name: str) -> Path:
        """CSV file of a named table.

        Raises:
            InvalidNameError: If the name is unsafe.
        """
        _validate_name(name)
        return self.root / f"{name}.csv"


def default_output_dir(base: Path, experiment: str, seed: int) -> Path:
    """``<base>/<experiment>-seed<seed>``."""
    return base / f"{experiment}-seed{seed}"
