"""SOR / SSOR relaxation sweeps on canonical CSR matrices."""

from __future__ import annotations

import numpy as np

from . import _kernels
from .errors import DimensionMismatchError, ZeroPivotError
from .ilu import _diag_positions
from .sparse import ensure_canonical


def sor_sweep(A, x, r, omega: float = 1.0, symmetric: bool = False, sweeps: int = 1):
    """Run SOR (or SSOR when ``symmetric``) sweeps for A x = r.

    ``x`` is the initial guess, not modified; the updated iterate is
    returned. One symmetric sweep is a forward pass followed by a backward
    pass. Zero diagonal entries are rejected.
    """
    A = ensure_canonical(A)
    if A.shape[0] != A.shape[1]:
        raise DimensionMismatchError(f"sor needs a square matrix, got {A.shape}")
    x = np.array(x, dtype=np.float64, copy=True)
    r = np.asarray(r, dtype=np.float64)
    if x.shape[0] != A.shape[0] or r.shape[0] != A.shape[0]:
        raise DimensionMismatchError("sor: vector length mismatch")
    diag = _diag_positions(A, "sor")
    if np.any(A.data[diag] == 0.0):
        row = int(np.flatnonzero(A.data[diag] == 0.0)[0])
        raise ZeroPivotError(f"sor: zero diagonal at row {row}", row=row)
    for _ in range(sweeps):
        _kernels.sor_sweep_kernel(A.indptr, A.indices, A.data, diag, x, r, omega, True)
        if symmetric:
            _kernels.sor_sweep_kernel(
                A.indptr, A.indices, A.data, diag, x, r, omega, False
            )
    return x


class SorSmoother:
    """Reusable SOR smoother with precomputed diagonal positions.

    ``direction`` per call: forward, backward, or symmetric; used by the
    multigrid V-cycle (forward pre-smoothing, backward post-smoothing keeps
    the cycle symmetric for symmetric problems).
    """

    def __init__(self, A, omega: float = 1.0, symmetric: bool = False):
        self.A = ensure_canonical(A)
        self.diag = _diag_positions(self.A, "sor")
        if np.any(self.A.data[self.diag] == 0.0):
            row = int(np.flatnonzero(self.A.data[self.diag] == 0.0)[0])
            raise ZeroPivotError(f"sor: zero diagonal at row {row}", row=row)
        self.omega = omega
        self.symmetric = symmetric

    def smooth(self, x, b, sweeps: int, forward: bool = True) -> np.ndarray:
        x = np.array(x, dtype=np.float64, copy=True)
        b = np.asarray(b, dtype=np.float64)
        for _ in range(sweeps):
            if self.symmetric:
                _kernels.sor_sweep_kernel(
                    self.A.indptr, self.A.indices, self.A.data, self.diag,
                    x, b, self.omega, True,
                )
                _kernels.sor_sweep_kernel(
                    self.A.indptr, self.A.indices, self.A.data, self.diag,
                    x, b, self.omega, False,
                )
            else:
                _kernels.sor_sweep_kernel(
                    self.A.indptr, self.A.indices, self.A.data, self.diag,
                    x, b, self.omega, forward,
                )
        return x
