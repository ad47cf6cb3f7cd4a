"""Tests for the output layout module."""

from __future__ import annotations

from typing import TYPE_CHECKING

import pytest

from tblocality.infrastructure.paths import InvalidNameError, OutputLayout, default_output_dir

if TYPE_CHECKING:
    from pathlib import Path


class TestOutputLayout:
    """Tests for OutputLayout."""

    def test_fixed_files(self, temp_dir: Path) -> None:
        """Summary and configuration files sit in the run root."""
        layout = OutputLayout(temp_dir)
        assert layout.summary_json() == temp_dir / "summary.json"
        assert layout.summary_md() == temp_dir / "summary.md"
        assert layout.configuration() == temp_dir / "configuration.txt"

    def test_table_path(self, temp_dir: Path) -> None:
        """Tables are CSV files named after the table."""
        assert OutputLayout(temp_dir).table("ct-0") == temp_dir / "ct-0.csv"

    @pytest.mark.parametrize("name", ["", "../escape", "a/b", "-leading", "x" * 101])
    def test_rejects_unsafe_table_names(self, temp_dir: Path, name: str) -> None:
        """Names that could leave the run directory are refused."""
        with pytest.raises(InvalidNameError):
            OutputLayout(temp_dir).table(name)

    def test_ensure_root_creates_directory(self, temp_dir: Path) -> None:
        """Missing parents are created."""
        root = temp_dir / "a" / "b"
        assert OutputLayout(root).ensure_root() == root
        assert root.is_dir()


class TestDefaultOutputDir:
    """Tests for default_output_dir."""

    def test_names_experiment_and_seed(self, temp_dir: Path) -> None:
        """The directory name combines experiment and seed."""
        assert default_output_dir(temp_dir, "bands", 7) == temp_dir / "bands-seed7"
