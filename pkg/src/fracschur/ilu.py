"""ILU(0) and point-block ILU(0) on canonical CSR matrices.

Both factorizations live on the sparsity pattern of the input (no fill) and
store L and U combined, with the unit diagonal of L implicit. The block
variant treats dense cell_size x cell_size blocks as scalars, which is what
a point-block factorization of an interleaved or cell-major matrix means.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from . import _kernels
from .errors import DimensionMismatchError, ZeroPivotError
from .sparse import ensure_canonical


def _diag_positions(A: sp.csr_matrix, what: str) -> np.ndarray:
    """Storage position of each diagonal entry; error if one is missing."""
    n = A.shape[0]
    diag = np.empty(n, dtype=np.int64)
    indptr, indices = A.indptr, A.indices
    for i in range(n):
        lo, hi = indptr[i], indptr[i + 1]
        pos = lo + np.searchsorted(indices[lo:hi], i)
        if pos >= hi or indices[pos] != i:
            raise ZeroPivotError(f"{what}: row {i} has no stored diagonal entry", row=i)
        diag[i] = pos
    return diag


@dataclass(frozen=True, eq=False)
class Ilu0Factors:
    """Combined LU storage on pattern(A); L's unit diagonal is implicit."""

    indptr: np.ndarray
    indices: np.ndarray
    data: np.ndarray
    diag: np.ndarray
    n: int

    @property
    def nnz(self) -> int:
        return self.data.shape[0]


def ilu0_factor(A) -> Ilu0Factors:
    """ILU(0) factorization of a square canonical CSR matrix.

    Zero pivots raise :class:`ZeroPivotError` with the offending row.
    """
    A = ensure_canonical(A)
    if A.shape[0] != A.shape[1]:
        raise DimensionMismatchError(f"ilu0 needs a square matrix, got {A.shape}")
    diag = _diag_positions(A, "ilu0")
    data = A.data.copy()
    bad = _kernels.ilu0_factor_kernel(A.indptr, A.indices, data, diag)
    if bad >= 0:
        raise ZeroPivotError(f"ilu0: zero pivot at row {bad}", row=int(bad))
    return Ilu0Factors(
        indptr=A.indptr.copy(), indices=A.indices.copy(), data=data, diag=diag, n=A.shape[0]
    )


def ilu0_apply(f: Ilu0Factors, r) -> np.ndarray:
    """Forward/backward substitution solving LU x = r."""
    r = np.asarray(r, dtype=np.float64)
    if r.shape[0] != f.n:
        raise DimensionMismatchError("ilu0_apply: vector length mismatch")
    return _kernels.lu_solve_kernel(f.indptr, f.indices, f.data, f.diag, r)


@dataclass(frozen=True, eq=False)
class BlockIlu0Factors:
    """Block-pattern ILU(0) factors over dense cell blocks."""

    indptr: np.ndarray
    indices: np.ndarray
    blocks: np.ndarray
    diag: np.ndarray
    inv_diag: np.ndarray
    cell_size: int
    n: int


def _to_block_csr(A: sp.csr_matrix, k: int):
    """Convert scalar CSR to block-CSR with dense k x k cell blocks.

    A block is stored when any of its k*k scalar positions is stored;
    missing scalars inside a stored block are zeros.
    """
    n = A.shape[0]
    nb = n // k
    coo = A.tocoo()
    key = (coo.row.astype(np.int64) // k) * nb + coo.col.astype(np.int64) // k
    uniq, entry_block = np.unique(key, return_inverse=True)
    block_rows = uniq // nb
    indices = (uniq % nb).astype(np.int64)
    counts = np.zeros(nb + 1, dtype=np.int64)
    np.add.at(counts, block_rows + 1, 1)
    indptr = np.cumsum(counts)
    blocks = np.zeros((uniq.shape[0], k, k))
    blocks[entry_block, coo.row % k, coo.col % k] = coo.data
    return indptr, indices, blocks


def block_ilu0_factor(A, cell_size: int) -> BlockIlu0Factors:
    """Point-block ILU(0) with dense cell_size blocks treated as scalars."""
    A = ensure_canonical(A)
    n = A.shape[0]
    if A.shape[0] != A.shape[1]:
        raise DimensionMismatchError(f"block ilu0 needs a square matrix, got {A.shape}")
    if cell_size < 1 or n % cell_size:
        raise DimensionMismatchError(
            f"matrix size {n} not divisible by cell size {cell_size}"
        )
    if cell_size == 1:
        f = ilu0_factor(A)
        return BlockIlu0Factors(
            indptr=f.indptr,
            indices=f.indices,
            blocks=f.data.reshape(-1, 1, 1),
            diag=f.diag,
            inv_diag=(1.0 / f.data[f.diag]).reshape(-1, 1, 1),
            cell_size=1,
            n=n,
        )
    indptr, indices, blocks = _to_block_csr(A, cell_size)
    nb = n // cell_size
    diag = np.empty(nb, dtype=np.int64)
    for i in range(nb):
        lo, hi = indptr[i], indptr[i + 1]
        pos = lo + np.searchsorted(indices[lo:hi], i)
        if pos >= hi or indices[pos] != i:
            raise ZeroPivotError(
                f"block ilu0: cell {i} has no stored diagonal block", cell=i
            )
        diag[i] = pos
    inv_diag = np.zeros((nb, cell_size, cell_size))
    bad = _kernels.block_ilu0_factor_kernel(indptr, indices, blocks, diag, inv_diag)
    if bad >= 0:
        raise ZeroPivotError(
            f"block ilu0: singular diagonal block at cell {bad}", cell=int(bad)
        )
    return BlockIlu0Factors(
        indptr=indptr,
        indices=indices,
        blocks=blocks,
        diag=diag,
        inv_diag=inv_diag,
        cell_size=cell_size,
        n=n,
    )


def block_ilu0_apply(f: BlockIlu0Factors, r) -> np.ndarray:
    r = np.asarray(r, dtype=np.float64)
    if r.shape[0] != f.n:
        raise DimensionMismatchError("block_ilu0_apply: vector length mismatch")
    if f.cell_size == 1:
        return _kernels.lu_solve_kernel(
            f.indptr, f.indices, f.blocks.reshape(-1), f.diag, r
        )
    return _kernels.block_lu_solve_kernel(
        f.indptr, f.indices, f.blocks, f.diag, f.inv_diag, r, f.cell_size
    )
