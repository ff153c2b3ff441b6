"""Classical algebraic multigrid: Ruge-Stuben coarsening, direct interpolation,
Galerkin coarse operators, and a single-V-cycle apply.

Supports scalar systems and an unknown-based mode for vector problems where
the coarsening is decided on one component's scalar submatrix and the
interpolation is replicated across the remaining components of each cell.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from ._kernels import direct_interp_kernel, rs_cf_split_kernel
from .dense import DenseSolver
from .errors import DimensionMismatchError
from .ilu import BlockIlu0Factors, block_ilu0_apply, block_ilu0_factor
from .relaxation import SorSmoother
from .sparse import ensure_canonical

COARSE_CAP = 64
MAX_LEVELS = 30

F_POINT = 1
C_POINT = 2


def strength_graph(A: sp.csr_matrix, theta: float) -> sp.csr_matrix:
    """Strong connections of A: keep a_ij with |a_ij| >= theta * max_{k!=i} |a_ik|.

    The result is a CSR matrix holding the original values of the strong
    entries, with the diagonal removed.
    """
    A = ensure_canonical(A)
    n = A.shape[0]
    coo = A.tocoo()
    off = coo.row != coo.col
    rows = coo.row[off]
    cols = coo.col[off]
    vals = coo.data[off]
    row_max = np.zeros(n)
    np.maximum.at(row_max, rows, np.abs(vals))
    keep = np.abs(vals) >= theta * row_max[rows]
    keep &= vals != 0.0
    S = sp.csr_matrix((vals[keep], (rows[keep], cols[keep])), shape=A.shape)
    S.sort_indices()
    return S


def cf_split(S: sp.csr_matrix) -> np.ndarray:
    """Ruge-Stuben coarse/fine splitting on a strength graph.

    Returns an int8 array with C_POINT on coarse and F_POINT on fine nodes.
    Ties in the influence count break toward the lowest index, so the
    splitting is deterministic.
    """
    St = S.T.tocsr()
    St.sort_indices()
    return rs_cf_split_kernel(
        S.indptr.astype(np.int64), S.indices.astype(np.int64),
        St.indptr.astype(np.int64), St.indices.astype(np.int64),
    )


def direct_interpolation(A: sp.csr_matrix, S: sp.csr_matrix, marks: np.ndarray) -> sp.csr_matrix:
    """Direct interpolation to the coarse nodes selected in ``marks``.

    Coarse rows carry a single unit entry. Fine rows distribute the row's
    off-diagonal weight over the strong coarse neighbors, handling positive
    and negative couplings separately; a sign class with no strong coarse
    representative is folded into the diagonal instead.
    """
    A = ensure_canonical(A)
    n = A.shape[0]
    coarse_index = np.cumsum(marks == C_POINT) - 1
    n_coarse = int(coarse_index[-1]) + 1 if n > 0 else 0
    indptr, indices, data = direct_interp_kernel(
        A.indptr.astype(np.int64), A.indices.astype(np.int64), A.data,
        S.indptr.astype(np.int64), S.indices.astype(np.int64), S.data,
        marks, coarse_index.astype(np.int64),
    )
    P = sp.csr_matrix((data, indices, indptr), shape=(n, n_coarse))
    P.sort_indices()
    return P


def _expand_interpolation(P_scalar: sp.csr_matrix, block_size: int) -> sp.csr_matrix:
    """Replicate a per-cell scalar interpolation across all cell components."""
    if block_size == 1:
        return P_scalar
    return sp.kron(P_scalar, sp.identity(block_size, format="csr"), format="csr")


class _BlockIluSmoother:
    """Richardson iteration preconditioned by point-block ILU(0)."""

    def __init__(self, A: sp.csr_matrix, cell_size: int):
        self.A = A
        self.factors: BlockIlu0Factors = block_ilu0_factor(A, cell_size)

    def smooth(self, x, b, sweeps: int, forward: bool = True) -> np.ndarray:
        x = np.array(x, dtype=np.float64)
        for _ in range(sweeps):
            x += block_ilu0_apply(self.factors, b - self.A @ x)
        return x


@dataclass
class AmgLevel:
    A: sp.csr_matrix
    P: sp.csr_matrix
    R: sp.csr_matrix
    smoother: object


@dataclass
class AmgHierarchy:
    """Multigrid hierarchy: intermediate levels plus a dense coarse solver."""

    levels: list = field(default_factory=list)
    coarse: DenseSolver = None
    coarse_A: sp.csr_matrix = None
    strong_threshold: float = 0.7
    n_smooth: int = 2
    smoother: str = "sor"
    block_size: int = 1
    stagnated: bool = False

    @property
    def n_levels(self) -> int:
        return len(self.levels) + 1

    @property
    def level_sizes(self) -> list:
        return [lvl.A.shape[0] for lvl in self.levels] + [self.coarse_A.shape[0]]

    @property
    def operator_complexity(self) -> float:
        nnz0 = self.levels[0].A.nnz if self.levels else self.coarse_A.nnz
        total = sum(lvl.A.nnz for lvl in self.levels) + self.coarse_A.nnz
        return total / max(nnz0, 1)

    def stats(self) -> dict:
        return {
            "levels": self.n_levels,
            "sizes": self.level_sizes,
            "operator_complexity": self.operator_complexity,
            "strong_threshold": self.strong_threshold,
            "smoother": self.smoother,
            "stagnated": self.stagnated,
        }


def _make_smoother(A: sp.csr_matrix, smoother: str, block_size: int):
    if smoother == "sor":
        return SorSmoother(A, omega=1.0, symmetric=False)
    if smoother == "ssor":
        return SorSmoother(A, omega=1.0, symmetric=True)
    if smoother == "block_ilu0":
        return _BlockIluSmoother(A, block_size)
    raise ValueError(f"unknown smoother {smoother!r}; expected sor, ssor, or block_ilu0")


def amg_setup(
    A,
    strong_threshold: float = 0.7,
    smoother: str = "sor",
    n_smooth: int = 2,
    block_size: int = 1,
    coarse_cap: int = COARSE_CAP,
) -> AmgHierarchy:
    """Build a multigrid hierarchy for A.

    ``block_size`` > 1 switches to unknown-based coarsening: the splitting and
    interpolation come from the component-0 scalar submatrix and are expanded
    cellwise, while smoothing and Galerkin products act on the full matrix.
    Coarsening that fails to shrink a level falls back to a dense direct
    solver on that level with a warning.
    """
    A = ensure_canonical(A)
    if A.shape[0] != A.shape[1]:
        raise DimensionMismatchError(f"multigrid setup needs a square matrix, got {A.shape}")
    if block_size < 1 or A.shape[0] % block_size:
        raise DimensionMismatchError(
            f"matrix size {A.shape[0]} not divisible by cell size {block_size}"
        )
    if not 0.0 < strong_threshold <= 1.0:
        raise ValueError("strong_threshold must lie in (0, 1]")

    h = AmgHierarchy(
        strong_threshold=strong_threshold,
        n_smooth=n_smooth,
        smoother=smoother,
        block_size=block_size,
    )
    while A.shape[0] > coarse_cap and len(h.levels) < MAX_LEVELS:
        if block_size > 1:
            A_scalar = ensure_canonical(A[0::block_size, 0::block_size])
        else:
            A_scalar = A
        S = strength_graph(A_scalar, strong_threshold)
        marks = cf_split(S)
        n_coarse = int(np.count_nonzero(marks == C_POINT))
        if n_coarse == 0 or n_coarse >= A_scalar.shape[0]:
            h.stagnated = True
            warnings.warn(
                f"coarsening stagnated at size {A.shape[0]} "
                f"(coarse candidate {n_coarse * block_size}); "
                "using a dense direct solve on this level",
                RuntimeWarning,
                stacklevel=2,
            )
            break
        P = _expand_interpolation(direct_interpolation(A_scalar, S, marks), block_size)
        R = P.T.tocsr()
        R.sort_indices()
        A_next = ensure_canonical(R @ A @ P)
        h.levels.append(AmgLevel(A=A, P=P, R=R, smoother=_make_smoother(A, smoother, block_size)))
        A = A_next
    h.coarse_A = A
    h.coarse = DenseSolver(A, cap=max(A.shape[0], COARSE_CAP))
    return h


def _vcycle(h: AmgHierarchy, depth: int, b: np.ndarray) -> np.ndarray:
    if depth == len(h.levels):
        return h.coarse.solve(b)
    lvl = h.levels[depth]
    x = np.zeros_like(b)
    x = lvl.smoother.smooth(x, b, h.n_smooth, forward=True)
    coarse_b = lvl.R @ (b - lvl.A @ x)
    x += lvl.P @ _vcycle(h, depth + 1, coarse_b)
    return lvl.smoother.smooth(x, b, h.n_smooth, forward=False)


def amg_vcycle(h: AmgHierarchy, r) -> np.ndarray:
    """One V(n_smooth, n_smooth) cycle applied to r from a zero initial guess."""
    r = np.asarray(r, dtype=np.float64)
    n = h.levels[0].A.shape[0] if h.levels else h.coarse_A.shape[0]
    if r.shape[0] != n:
        raise DimensionMismatchError(
            f"multigrid apply: vector length {r.shape[0]} does not match operator size {n}"
        )
    return _vcycle(h, 0, r)
