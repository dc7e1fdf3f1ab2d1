"""Assembly and Thomas solution of the per-step tridiagonal system."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

Array = np.ndarray

#: Pivots smaller than this in magnitude abort the elimination.
PIVOT_TOL = 1.0e-14


@dataclass(frozen=True, slots=True)
class TridiagonalSystem:
    """Row ``i`` reads ``sub[i] x[i-1] + diag[i] x[i] + sup[i] x[i+1] = rhs[i]``.

    ``sub[0]`` and ``sup[-1]`` are stored but never used.
    """

    sub: Array
    diag: Array
    sup: Array
    rhs: Array

    @property
    def size(self) -> int:
        return self.diag.size

    def is_diagonally_dominant(self) -> bool:
        off = np.abs(self.sub) + np.abs(self.sup)
        off[0] -= abs(self.sub[0])
        off[-1] -= abs(self.sup[-1])
        return bool(np.all(np.abs(self.diag) > off))

    def to_dense(self) -> Array:
        n = self.size
        a = np.diag(self.diag.astype(float))
        if n > 1:
            a += np.diag(self.sub[1:], -1) + np.diag(self.sup[:-1], 1)
        return a


def build_system(
    s_n: float,
    m_vector: Array,
    f_tilde: Array | None,
    bc_left: float,
    bc_right: float,
) -> TridiagonalSystem:
    """System ``-S U_{j-1} + (1 + 2S) U_j - S U_{j+1} = M U_j + F~_j`` on the interior.

    Boundary values are moved to the right-hand side, so the matrix is the
    symmetric Toeplitz matrix ``A`` of size ``N - 1``.
    """
    if not s_n > 0.0:
        raise ValueError(f"s_n must be > 0 (got {s_n})")
    if type(m_vector) is not np.ndarray or m_vector.dtype != np.float64:
        m_vector = np.asarray(m_vector, dtype=np.float64)
    if m_vector.size < 1:
        raise ValueError("system needs at least one unknown")
    if f_tilde is None:
        rhs = m_vector.copy()
    else:
        f_tilde = np.asarray(f_tilde, dtype=np.float64)
        if f_tilde.shape != m_vector.shape:
            raise ValueError(
                f"f_tilde has shape {f_tilde.shape}, expected {m_vector.shape}"
            )
        rhs = m_vector + f_tilde
    # every row: |1 + 2S| > |S| + |S|
    assert 1.0 + 2.0 * s_n > 2.0 * s_n, "system is not strictly diagonally dominant"
    return TridiagonalSystem(*_assemble(float(s_n), rhs, float(bc_left), float(bc_right)))


@njit(cache=True)
def _assemble(s_n, rhs, bc_left, bc_right):
    size = rhs.size
    sub = np.empty(size)
    diag = np.empty(size)
    sup = np.empty(size)
    for i in range(size):
        sub[i] = -s_n
        diag[i] = 1.0 + 2.0 * s_n
        sup[i] = -s_n
    sub[0] = 0.0
    sup[size - 1] = 0.0
    rhs[0] += s_n * bc_left
    rhs[size - 1] += s_n * bc_right
    return sub, diag, sup, rhs


@njit(cache=True)
def _thomas(sub, diag, sup, rhs, pivot_tol):
    n = diag.size
    c = np.empty(n)
    d = np.empty(n)
    x = np.empty(n)

    pivot = diag[0]
    if abs(pivot) < pivot_tol:
        return x, 0
    c[0] = sup[0] / pivot
    d[0] = rhs[0] / pivot
    for i in range(1, n):
        pivot = diag[i] - sub[i] * c[i - 1]
        if abs(pivot) < pivot_tol:
            return x, i
        c[i] = sup[i] / pivot
        d[i] = (rhs[i] - sub[i] * d[i - 1]) / pivot

    x[n - 1] = d[n - 1]
    for i in range(n - 2, -1, -1):
        x[i] = d[i] - c[i] * x[i + 1]
    return x, -1


def _as_float(a) -> Array:
    if type(a) is np.ndarray and a.dtype == np.float64:
        return a
    return np.ascontiguousarray(a, dtype=np.float64)


def thomas_solve(system: TridiagonalSystem) -> Array:
    """Solve ``system`` by forward elimination and back substitution.

    The input arrays are left untouched. Raises
    :class:`numpy.linalg.LinAlgError` if a pivot vanishes, which cannot
    happen for diagonally dominant systems.
    """
    x, failed_row = _thomas(
        _as_float(system.sub),
        _as_float(system.diag),
        _as_float(system.sup),
        _as_float(system.rhs),
        PIVOT_TOL,
    )
    if failed_row >= 0:
        raise np.linalg.LinAlgError(f"pivot below {PIVOT_TOL:g} in row {failed_row}")
    return x


__all__ = ["PIVOT_TOL", "TridiagonalSystem", "build_system", "thomas_solve"]
