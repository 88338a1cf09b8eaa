"""Thomas algorithm with a Sherman-Morrison correction for periodic corners.

Row convention: ``sub[i] = A[i, i-1]`` (``sub[0]`` unused), ``sup[i] = A[i, i+1]``
(``sup[-1]`` unused). The periodic corners are ``top_right = A[0, n-1]`` and
``bottom_left = A[n-1, 0]``.
"""
from __future__ import annotations

import numpy as np
from numba import njit

from app.core.errors import HamiltonianError


@njit(cache=True)
def thomas_factor(sub, diag, sup):
    """Forward elimination coefficients (c', denominators) of the Thomas algorithm."""
    n = diag.shape[0]
    cprime = np.empty_like(diag)
    denom = np.empty_like(diag)
    denom[0] = diag[0]
    cprime[0] = sup[0] / denom[0]
    for i in range(1, n):
        denom[i] = diag[i] - sub[i] * cprime[i - 1]
        cprime[i] = sup[i] / denom[i]
    return cprime, denom


@njit(cache=True)
def thomas_solve(sub, cprime, denom, rhs):
    n = rhs.shape[0]
    x = np.empty_like(rhs)
    x[0] = rhs[0] / denom[0]
    for i in range(1, n):
        x[i] = (rhs[i] - sub[i] * x[i - 1]) / denom[i]
    for i in range(n - 2, -1, -1):
        x[i] -= cprime[i] * x[i + 1]
    return x


class TridiagonalSolver:
    """Factor once, solve many right-hand sides in O(n) each."""

    def __init__(
        self,
        sub: np.ndarray,
        diag: np.ndarray,
        sup: np.ndarray,
        top_right: complex = 0.0,
        bottom_left: complex = 0.0,
        periodic: bool = False,
    ):
        n = diag.shape[0]
        if periodic and n < 3:
            raise HamiltonianError(f"periodic tridiagonal solve needs >= 3 rows, got {n}")
        self.periodic = periodic
        self._sub = np.ascontiguousarray(sub, dtype=np.complex128)
        diag = np.array(diag, dtype=np.complex128)
        sup = np.ascontiguousarray(sup, dtype=np.complex128)

        if periodic:
            gamma = -diag[0] if diag[0] != 0 else 1.0
            diag[0] -= gamma
            diag[-1] -= top_right * bottom_left / gamma
        try:
            self._cprime, self._denom = thomas_factor(self._sub, diag, sup)
        except ZeroDivisionError:
            raise HamiltonianError("singular tridiagonal system") from None
        if not np.all(np.isfinite(self._denom)) or np.any(self._denom == 0):
            raise HamiltonianError("singular tridiagonal system")

        if periodic:
            u = np.zeros(n, dtype=np.complex128)
            u[0] = gamma
            u[-1] = bottom_left
            self._z = thomas_solve(self._sub, self._cprime, self._denom, u)
            self._v_last = top_right / gamma
            self._sm_denominator = 1.0 + self._z[0] + self._v_last * self._z[-1]
            if self._sm_denominator == 0:
                raise HamiltonianError("singular periodic tridiagonal system")

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        rhs = np.ascontiguousarray(rhs, dtype=np.complex128)
        y = thomas_solve(self._sub, self._cprime, self._denom, rhs)
        if self.periodic:
            factor = (y[0] + self._v_last * y[-1]) / self._sm_denominator
            y = y - factor * self._z
        return y
