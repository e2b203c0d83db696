"""Small dense linear-algebra helpers with dimension checks.

Everything is backed by numpy/LAPACK; the wrappers only add the error
contracts the solvers rely on.
"""

from __future__ import annotations

import numpy as np
import scipy.linalg

PIVOT_RTOL = 1e-14


class SingularMatrixError(np.linalg.LinAlgError):
    def __init__(self, pivot: int, value: float):
        super().__init__(f"matrix is singular to working precision at pivot {pivot} "
                         f"(|u_{pivot}{pivot}| = {value:.3e})")
        self.pivot = pivot


def _check_square(A):
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {A.shape}")
    return A


def lu_factor(A):
    """LU factorization with partial pivoting; raises on a vanishing pivot."""
    A = _check_square(A)
    lu, piv = scipy.linalg.lu_factor(A, check_finite=True)
    diag = np.abs(np.diag(lu))
    scale = max(np.abs(A).max(), np.finfo(float).tiny)
    bad = np.flatnonzero(diag <= PIVOT_RTOL * scale)
    if bad.size:
        raise SingularMatrixError(int(bad[0]), float(diag[bad[0]]))
    return lu, piv


def lu_solve_factored(factors, b):
    return scipy.linalg.lu_solve(factors, np.asarray(b, dtype=float))


def lu_solve(A, b):
    A = _check_square(A)
    b = np.asarray(b, dtype=float)
    if b.shape[0] != A.shape[0]:
        raise ValueError(f"right-hand side has length {b.shape[0]}, expected {A.shape[0]}")
    return lu_solve_factored(lu_factor(A), b)


def matmul(A, B):
    A, B = np.asarray(A, dtype=float), np.asarray(B, dtype=float)
    if A.shape[-1] != B.shape[0]:
        raise ValueError(f"cannot multiply shapes {A.shape} and {B.shape}")
    return A @ B


def matvec(A, x):
    A, x = np.asarray(A, dtype=float), np.asarray(x, dtype=float)
    if A.ndim != 2 or x.ndim != 1 or A.shape[1] != x.shape[0]:
        raise ValueError(f"cannot apply shape {A.shape} to vector of shape {x.shape}")
    return A @ x


def axpy(a: float, x, y):
    x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    if x.shape != y.shape:
        raise ValueError(f"shape mismatch {x.shape} vs {y.shape}")
    return a * x + y


def norm_inf(x) -> float:
    x = np.asarray(x, dtype=float)
    return float(np.max(np.abs(x))) if x.size else 0.0
