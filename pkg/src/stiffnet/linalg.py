"""Dense factor-and-solve and matrix-vector products for the Newton systems.

Dense LU with partial pivoting (LAPACK via scipy) is the only factorization
used anywhere in the package: Newton system matrices are always assembled
dense, so the standard and economical solver variants differ only in system
size, not in solver technology. Sparse matrices (CSR) appear solely in
right-hand-side evaluation.
"""

from __future__ import annotations

import numpy as np
import scipy.linalg
import scipy.sparse

# Pivot magnitudes below PIVOT_RTOL * max|A| signal a degenerate Jacobian.
PIVOT_RTOL = 1e-14


class SingularMatrix(Exception):
    """A pivot fell below the singularity threshold."""


class DimensionMismatch(Exception):
    """Operand shapes are incompatible."""


def lu_solve(a, b):
    """Solve the dense square system ``a @ x = b``.

    Raises SingularMatrix when a pivot magnitude drops below
    ``PIVOT_RTOL * max|a|``, which callers treat as a rejected Newton step.
    The input matrix is not modified.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionMismatch(f"matrix must be square, got {a.shape}")
    if b.shape != (a.shape[0],):
        raise DimensionMismatch(f"rhs length {b.shape} does not match {a.shape}")
    scale = np.max(np.abs(a)) if a.size else 0.0
    lu, piv = scipy.linalg.lu_factor(a, check_finite=False)
    pivots = np.abs(np.diagonal(lu))
    if scale == 0.0 or np.min(pivots) < PIVOT_RTOL * scale:
        raise SingularMatrix("pivot below threshold, matrix numerically singular")
    return scipy.linalg.lu_solve((lu, piv), b, check_finite=False)


def matvec(m, v):
    """Product ``m @ v`` for dense arrays or scipy sparse matrices."""
    v = np.asarray(v, dtype=float)
    if m.shape[1] != v.shape[0]:
        raise DimensionMismatch(f"cols {m.shape[1]} != len(v) {v.shape[0]}")
    if scipy.sparse.issparse(m):
        return m @ v
    return np.asarray(m, dtype=float) @ v


def norm_inf(v):
    v = np.asarray(v)
    return float(np.max(np.abs(v))) if v.size else 0.0
