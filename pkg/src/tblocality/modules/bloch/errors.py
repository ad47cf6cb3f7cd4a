"""Bloch transform errors."""

__all__ = ["BlochError"]


class BlochError(ValueError):
    """Invalid reference crystal or wavevector input."""
