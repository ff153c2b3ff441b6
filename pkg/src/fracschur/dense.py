"""Dense direct solves: multigrid coarse levels and the exact-oracle mode."""

from __future__ import annotations

import numpy as np
import scipy.linalg
import scipy.sparse as sp

from .errors import DimensionMismatchError, SingularBlockError

DENSE_CAP = 2000


def _as_dense(A) -> np.ndarray:
    if sp.issparse(A):
        return A.toarray()
    return np.asarray(A, dtype=np.float64)


class DenseSolver:
    """LU factorization with partial pivoting, reusable across solves."""

    def __init__(self, A, cap: int = DENSE_CAP):
        M = _as_dense(A)
        if M.shape[0] != M.shape[1]:
            raise DimensionMismatchError(f"dense solver needs square input, got {M.shape}")
        if M.shape[0] > cap:
            raise DimensionMismatchError(
                f"dense solver refused: size {M.shape[0]} exceeds cap {cap}"
            )
        self.n = M.shape[0]
        if self.n == 0:
            self.lu = None
            return
        lu, piv = scipy.linalg.lu_factor(M, check_finite=False)
        if np.any(np.diag(lu) == 0.0) or not np.all(np.isfinite(lu)):
            raise SingularBlockError("dense solver: matrix is singular to machine precision")
        self.lu = (lu, piv)

    def solve(self, r) -> np.ndarray:
        r = np.asarray(r, dtype=np.float64)
        if r.shape[0] != self.n:
            raise DimensionMismatchError("dense solve: vector length mismatch")
        if self.n == 0:
            return np.zeros(0)
        return scipy.linalg.lu_solve(self.lu, r, check_finite=False)


def dense_solve(A, r, cap: int = DENSE_CAP) -> np.ndarray:
    """One-shot dense direct solve of A x = r (LU, partial pivoting)."""
    return DenseSolver(A, cap=cap).solve(r)
