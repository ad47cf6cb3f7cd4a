"""Environment defaults for runs (``TBLOCALITY_*`` variables)."""

from __future__ import annotations

from pathlib import Path

from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict

__all__ = [
    "Settings",
    "get_settings",
]


class Settings(BaseSettings):
    """Defaults used when neither a flag nor the config file sets a value.

    Attributes:
        threads: Worker threads for parallel sections.
        output_dir: Parent directory of run outputs.
    """

    model_config = SettingsConfigDict(env_prefix="TBLOCALITY_", extra="ignore")

    threads: int = Field(default=1, ge=1)
    output_dir: Path = Path("runs")


def get_settings() -> Settings:
    """Read settings from the current environment."""
    return Settings()
