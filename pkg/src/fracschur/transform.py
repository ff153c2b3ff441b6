"""Contact regularization and the first-level Schur complement.

The contact block J11 can be singular cellwise (stick and slide states). A
unit block-lower-triangular right transform Qr folds part of the interface
displacement coupling into the contact diagonal, making every cell block of
the transformed contact diagonal invertible, after which block 1 is
eliminated exactly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import DimensionMismatchError, SingularBlockError
from .sparse import (
    BlockLayout,
    TrailingView,
    block_diag_csr,
    ensure_canonical,
    extract_block,
    matmul,
)


def _cell_blocks(A: sp.csr_matrix, cell: int) -> np.ndarray:
    """Dense diagonal cell blocks of a square matrix with fixed cell size."""
    n = A.shape[0]
    if n % cell:
        raise DimensionMismatchError(f"size {n} not divisible by cell size {cell}")
    coo = A.tocoo()
    on_diag = coo.row // cell == coo.col // cell
    blocks = np.zeros((n // cell, cell, cell))
    blocks[coo.row[on_diag] // cell, coo.row[on_diag] % cell, coo.col[on_diag] % cell] = (
        coo.data[on_diag]
    )
    return blocks


def _invert_cells(blocks: np.ndarray, what: str, states=None) -> tuple:
    """Invert each cell block; returns (inverses, condition numbers)."""
    inverses = np.empty_like(blocks)
    conditions = np.empty(blocks.shape[0])
    for c in range(blocks.shape[0]):
        try:
            inverses[c] = np.linalg.inv(blocks[c])
        except np.linalg.LinAlgError:
            state = states[c] if states is not None else None
            raise SingularBlockError(
                f"{what}: cell {c}"
                + (f" (state {state})" if state is not None else "")
                + " has a singular diagonal block",
                cell=c,
                state=state,
                where=what,
            ) from None
        conditions[c] = np.linalg.cond(blocks[c])
    return inverses, conditions


@dataclass(frozen=True, eq=False)
class BlockDiagInverse:
    """Per-cell dense inverses of a block-diagonal matrix.

    ``blocks`` has shape (n_cells, k, k) and holds the inverses;
    ``conditions`` the source blocks' 2-norm condition numbers.
    """

    cell_block_size: int
    blocks: np.ndarray
    conditions: np.ndarray

    @property
    def n(self) -> int:
        return self.blocks.shape[0] * self.cell_block_size

    @property
    def condition_max(self) -> float:
        return float(self.conditions.max()) if self.conditions.size else 1.0

    def apply(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.shape[0] != self.n:
            raise DimensionMismatchError(
                f"block-diagonal apply: length {x.shape[0]}, expected {self.n}"
            )
        k = self.cell_block_size
        return np.einsum("cij,cj->ci", self.blocks, x.reshape(-1, k)).ravel()

    def as_csr(self) -> sp.csr_matrix:
        return block_diag_csr(self.blocks)


def _d22_inverse(J: sp.csr_matrix, layout: BlockLayout) -> BlockDiagInverse:
    J22 = extract_block(J, layout, 2, 2)
    cells = _cell_blocks(J22, layout.dim)
    inverses, conditions = _invert_cells(cells, "interface displacement diagonal")
    return BlockDiagInverse(cell_block_size=layout.dim, blocks=inverses, conditions=conditions)


def _pad_block(M: sp.spmatrix, shape: tuple, row0: int, col0: int) -> sp.csr_matrix:
    """Embed M into a zero matrix of the given shape at offset (row0, col0)."""
    coo = sp.coo_matrix(M)
    return sp.csr_matrix(
        (coo.data, (coo.row + row0, coo.col + col0)), shape=shape
    )


def build_qr(J: sp.csr_matrix, layout: BlockLayout) -> sp.csr_matrix:
    """Right transform: identity except block (2,1) = -D22^-1 J21.

    D22 is the cell-block diagonal of J22. The result is unit block lower
    triangular, so its determinant is one and applying it never changes
    blocks outside column 1.
    """
    d22inv = _d22_inverse(J, layout)
    J21 = extract_block(J, layout, 2, 1)
    Q21 = -(d22inv.as_csr() @ J21)
    n = layout.n
    row0 = layout.block_range(2)[0]
    col0 = layout.block_range(1)[0]
    return ensure_canonical(sp.identity(n, format="csr") + _pad_block(Q21, (n, n), row0, col0))


def invert_contact_block(J11_tilde: sp.csr_matrix, layout: BlockLayout) -> BlockDiagInverse:
    """Exact dense per-cell inverses of the regularized contact diagonal.

    Fails with the cell index and its contact state if a cell block is
    singular, which means the regularization did not take effect there.
    """
    n1 = layout.block_length(1)
    if J11_tilde.shape != (n1, n1):
        raise DimensionMismatchError(
            f"contact block has size {J11_tilde.shape}, layout expects {n1}"
        )
    cells = _cell_blocks(ensure_canonical(J11_tilde), layout.dim)
    inverses, conditions = _invert_cells(
        cells, "regularized contact diagonal", states=layout.states
    )
    return BlockDiagInverse(cell_block_size=layout.dim, blocks=inverses, conditions=conditions)


@dataclass(frozen=True, eq=False)
class TransformedSystem:
    """The transformed matrix and everything derived from its first block."""

    J_tilde: sp.csr_matrix
    Qr: sp.csr_matrix
    layout: BlockLayout
    E21: sp.csr_matrix
    J11_tilde_inv: BlockDiagInverse

    def solve_contact(self, r1) -> np.ndarray:
        """Apply the inverse of the regularized contact diagonal."""
        return self.J11_tilde_inv.apply(r1)

    def recover(self, x_tilde) -> np.ndarray:
        return recover_solution(self, x_tilde)


def apply_transform(J: sp.csr_matrix, layout: BlockLayout) -> TransformedSystem:
    """Assemble J_tilde = J Qr explicitly and invert its contact diagonal.

    Only block column 1 changes: the contact diagonal becomes
    J11 - J12 D22^-1 J21 (invertible cellwise), block (2,1) becomes
    E21 = (I - J22 D22^-1) J21, and the other rows pick up
    -J_i2 D22^-1 J21.
    """
    J = ensure_canonical(J)
    if J.shape != (layout.n, layout.n):
        raise DimensionMismatchError(
            f"matrix has shape {J.shape}, layout expects {layout.n}"
        )
    Qr = build_qr(J, layout)
    J_tilde = matmul(J, Qr)
    E21 = extract_block(J_tilde, layout, 2, 1)
    J11_tilde = extract_block(J_tilde, layout, 1, 1)
    inv = invert_contact_block(J11_tilde, layout)
    return TransformedSystem(
        J_tilde=J_tilde, Qr=Qr, layout=layout, E21=E21, J11_tilde_inv=inv
    )


def form_s1(ts: TransformedSystem) -> tuple:
    """Exact elimination of block 1 from the transformed system.

    Returns (S1, view) where S1 covers blocks 2-6 and ``view`` translates
    block ids into its local ranges. Only column-2 blocks differ from
    J_tilde's trailing part: S1_i2 = J_i2 - Jt_i1 Jt11^-1 J12.
    """
    layout = ts.layout
    view = TrailingView(layout, 2)
    lo = layout.block_range(2)[0]
    tail = ensure_canonical(ts.J_tilde[lo:, lo:])

    J12 = extract_block(ts.J_tilde, layout, 1, 2)
    col1 = ensure_canonical(ts.J_tilde[lo:, :lo])
    correction = col1 @ (ts.J11_tilde_inv.as_csr() @ J12)
    S1 = ensure_canonical(tail - _pad_block(correction, tail.shape, 0, 0))
    return S1, view


def recover_solution(ts: TransformedSystem, x_tilde) -> np.ndarray:
    """Map the transformed unknowns back: x = Qr x_tilde."""
    x_tilde = np.asarray(x_tilde, dtype=np.float64)
    if x_tilde.shape[0] != ts.layout.n:
        raise DimensionMismatchError(
            f"solution length {x_tilde.shape[0]} does not match system size {ts.layout.n}"
        )
    return ts.Qr @ x_tilde
