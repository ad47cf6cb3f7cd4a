"""Relaxation errors."""

from __future__ import annotations

from typing import TYPE_CHECKING

if TYPE_CHECKING:
    from tblocality.modules.relax.optimizer import RelaxResult

__all__ = ["RelaxationError"]


class RelaxationError(Exception):
    """Geometry relaxation failed.

    Attributes:
        best: Lowest-energy iterate reached, if any.
    """

    def __init__(self, message: str, *, best: RelaxResult | None = None) -> None:
        super().__init__(message)
        self.best = best
