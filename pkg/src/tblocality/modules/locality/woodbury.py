"""Finite-rank updates of an inverse.

    (A + U V)^{-1} = A^{-1} - A^{-1} U (I + V A^{-1} U)^{-1} V A^{-1}

The updated inverse is itself an inverse action, so updates compose.
"""

from __future__ import annotations

from typing import TYPE_CHECKING

import numpy as np
import scipy.linalg as la

from tblocality.modules.locality.errors import WoodburyError

if TYPE_CHECKING:
    from collections.abc import Callable

    from numpy.typing import ArrayLike, NDArray

__all__ = [
    "InverseAction",
    "UpdatedInverse",
    "inverse_action",
    "low_rank_factors",
    "woodbury_resolvent",
]

type InverseAction = Callable[[NDArray[np.complex128]], NDArray[np.complex128]]

# Relative singular-value cut for ranks and capacitance conditioning
_RANK_TOL = 1e-12


def inverse_action(matrix: ArrayLike) -> InverseAction:
    """x ↦ A^{-1} x from one LU factorisation of A."""
    a = np.asarray(matrix)
    lu, piv = la.lu_factor(a)

    def apply(x: NDArray[np.complex128]) -> NDArray[np.complex128]:
        return np.asarray(la.lu_solve((lu, piv), x))

    return apply


def low_rank_factors(
    update: ArrayLike, tol: float = _RANK_TOL
) -> tuple[NDArray[np.complex128], NDArray[np.complex128]]:
    """U, V with U V equal to ``update`` up to singular values below ``tol`` times the largest."""
    p = np.asarray(update)
    u, s, vh = la.svd(p)
    if s.size == 0 or s[0] == 0.0:
        return np.zeros((p.shape[0], 0), dtype=p.dtype), np.zeros((0, p.shape[1]), dtype=p.dtype)
    rank = int(np.count_nonzero(s > tol * s[0]))
    return u[:, :rank] * s[:rank], vh[:rank]


class UpdatedInverse:
    """Inverse action of A + U V built from the inverse action of A.

    Args:
        base: x ↦ A^{-1} x.
        left: U, shape (N, r).
        right: V, shape (r, N).

    Raises:
        WoodburyError: If I + V A^{-1} U is singular.
    """

    def __init__(self, base: InverseAction, left: ArrayLike, right: ArrayLike) -> None:
        self.base = base
        self.left = np.asarray(left)
        self.right = np.asarray(right)
        if self.left.shape[1] != self.right.shape[0]:
            raise WoodburyError(f"Factor shapes {self.left.shape} and {self.right.shape} do not match")
        self.rank = self.left.shape[1]
        self._factor: tuple[NDArray[np.complex128], NDArray[np.int32]] | None = None
        if self.rank:
            self._base_left = np.asarray(base(self.left))
            capacitance = np.eye(self.rank) + self.right @ self._base_left
            sigma = la.svdvals(capacitance)
            if sigma[-1] <= _RANK_TOL * max(1.0, sigma[0]):
                raise WoodburyError(f"Capacitance matrix is singular (smallest singular value {sigma[-1]:.3e})")
            self._factor = la.lu_factor(capacitance)

    def __call__(self, x: NDArray[np.complex128]) -> NDArray[np.complex128]:
        y = np.asarray(self.base(x))
        if self._factor is None:
            return y
        correction = la.lu_solve(self._factor, self.right @ y)
        return np.asarray(y - self._base_left @ correction)

    def matrix(self, size: int) -> NDArray[np.complex128]:
        """Dense (A + U V)^{-1}."""
        return self(np.eye(size, dtype=complex))


def woodbury_resolvent(
    base: InverseAction,
    update: ArrayLike | tuple[ArrayLike, ArrayLike],
    *,
    tol: float = _RANK_TOL,
) -> UpdatedInverse:
    """Inverse action of A + P given that of A.

    Args:
        base: x ↦ A^{-1} x.
        update: Dense finite-rank P, or its factors (U, V).
        tol: Relative singular-value cut when factorising a dense P.

    Returns:
        Updated inverse action; a zero P returns ``base`` unchanged.

    Raises:
        WoodburyError: If I + P A^{-1} is singular.
    """
    if isinstance(update, tuple):
        left, right = update
    else:
        left, right = low_rank_factors(update, tol)
    return UpdatedInverse(base, left, right)
