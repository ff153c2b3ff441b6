"""Pressure-temperature subsolvers applied to the final Schur complement.

Two production variants and one oracle:

* CPR: a pressure-only multigrid V-cycle handles the long-range elliptic
  coupling, then point-block ILU(0) on the cellwise-interleaved system
  corrects what the global stage missed,
  v = v_G + M_L^-1 (r - A v_G) with v_G = [AMG(A_pp) r_p; 0].
* SystemAMG: one V-cycle of unknown-based coupled multigrid on the
  interleaved system.
* ExactDense: a dense inverse, the oracle behind the exact-arithmetic
  convergence tests.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .amg import AmgHierarchy, amg_setup, amg_vcycle
from .dense import DENSE_CAP, DenseSolver
from .errors import DimensionMismatchError
from .ilu import BlockIlu0Factors, block_ilu0_apply, block_ilu0_factor
from .krylov import KrylovConfig, gmres
from .sparse import BlockLayout, Permutation, ensure_canonical

PT_VARIANTS = ("CPR", "SystemAMG", "ExactDense")


def interleave_permutation(layout: BlockLayout) -> Permutation:
    """Physics ordering [p_0..p_c, T_0..T_c] to cellwise [p_0, T_0, p_1, T_1, ...].

    ``forward[i]`` is the interleaved position of physics index ``i``.
    """
    n_p = layout.block_length(5)
    n_t = layout.block_length(6)
    if n_p != n_t:
        raise DimensionMismatchError(
            f"pressure and temperature cell counts differ ({n_p} vs {n_t}); "
            "cannot interleave"
        )
    forward = np.empty(2 * n_p, dtype=np.int64)
    forward[:n_p] = 2 * np.arange(n_p)
    forward[n_p:] = 2 * np.arange(n_p) + 1
    return Permutation.from_forward(forward)


@dataclass(eq=False)
class PtPreconditioner:
    """One of the three variants, set up for a fixed S3."""

    variant: str
    S3: sp.csr_matrix
    n_pressure: int
    permute: Permutation
    amg: AmgHierarchy | None = None
    ilu: BlockIlu0Factors | None = None
    dense: DenseSolver | None = None
    global_solve: callable = None
    local_solve: callable = None

    def apply(self, r) -> np.ndarray:
        r = np.asarray(r, dtype=np.float64)
        if r.shape[0] != self.S3.shape[0]:
            raise DimensionMismatchError(
                f"pressure-temperature apply: length {r.shape[0]}, "
                f"expected {self.S3.shape[0]}"
            )
        if self.variant == "CPR":
            return cpr_apply(self, r)
        if self.variant == "SystemAMG":
            return samg_apply(self, r)
        return self.dense.solve(r)

    def stats(self) -> dict:
        out = {"variant": self.variant}
        if self.amg is not None:
            out["amg"] = self.amg.stats()
        return out


def cpr_setup(
    S3: sp.csr_matrix,
    layout: BlockLayout,
    strong_threshold: float = 0.7,
    n_smooth: int = 2,
    coarse_cap: int = 64,
    global_solve=None,
    local_solve=None,
    interleave: bool = True,
) -> PtPreconditioner:
    """Two-stage preconditioner for S3.

    The default global stage is a pressure-only V-cycle (symmetric SOR
    smoothing); the default local stage is point-block ILU(0) with cell
    blocks of size two on the interleaved matrix. Both stages are pluggable
    so exact dense stages can replace them in tests; ``interleave=False``
    factors the physics-ordered matrix instead.
    """
    S3 = ensure_canonical(S3)
    permute = interleave_permutation(layout)
    n_p = layout.block_length(5)
    pc = PtPreconditioner(variant="CPR", S3=S3, n_pressure=n_p, permute=permute)

    if global_solve is None:
        pc.amg = amg_setup(
            S3[:n_p, :n_p],
            strong_threshold=strong_threshold,
            smoother="ssor",
            n_smooth=n_smooth,
            coarse_cap=coarse_cap,
        )
        hierarchy = pc.amg
        global_solve = lambda r_p: amg_vcycle(hierarchy, r_p)
    pc.global_solve = global_solve

    if local_solve is None:
        if interleave:
            pc.ilu = block_ilu0_factor(permute.permute_matrix(S3), 2)
            factors = pc.ilu

            def local_solve(r):
                return permute.unapply(block_ilu0_apply(factors, permute.apply(r)))

        else:
            pc.ilu = block_ilu0_factor(S3, 1)
            factors = pc.ilu

            def local_solve(r):
                return block_ilu0_apply(factors, r)

    pc.local_solve = local_solve
    return pc


def cpr_apply(pc: PtPreconditioner, r) -> np.ndarray:
    """v = v_G + M_L^-1 (r - S3 v_G), v_G = [global_solve(r_p); 0]."""
    r = np.asarray(r, dtype=np.float64)
    v_global = np.zeros_like(r)
    v_global[: pc.n_pressure] = pc.global_solve(r[: pc.n_pressure])
    return v_global + pc.local_solve(r - pc.S3 @ v_global)


def samg_setup(
    S3: sp.csr_matrix,
    layout: BlockLayout,
    strong_threshold: float = 0.7,
    n_smooth: int = 2,
    coarse_cap: int = 64,
) -> PtPreconditioner:
    """Coupled multigrid on the interleaved S3.

    Unknown-based setup: the coarsening comes from the pressure component's
    scalar submatrix and is replicated over each cell's two unknowns.
    Smoothing is cell-block ILU(0); point relaxation is not robust here
    because strong directional advection leaves rows without diagonal
    dominance, while the incomplete factorization absorbs those
    near-triangular couplings exactly.
    """
    S3 = ensure_canonical(S3)
    permute = interleave_permutation(layout)
    pc = PtPreconditioner(
        variant="SystemAMG", S3=S3, n_pressure=layout.block_length(5), permute=permute
    )
    pc.amg = amg_setup(
        permute.permute_matrix(S3),
        strong_threshold=strong_threshold,
        smoother="block_ilu0",
        n_smooth=n_smooth,
        block_size=2,
        coarse_cap=coarse_cap,
    )
    return pc


def samg_apply(pc: PtPreconditioner, r) -> np.ndarray:
    """One coupled V-cycle in interleaved ordering, mapped back to physics order."""
    r = np.asarray(r, dtype=np.float64)
    return pc.permute.unapply(amg_vcycle(pc.amg, pc.permute.apply(r)))


def exact_setup(S3: sp.csr_matrix, layout: BlockLayout, cap: int = DENSE_CAP) -> PtPreconditioner:
    """Dense-inverse variant; the oracle for exact-arithmetic convergence."""
    S3 = ensure_canonical(S3)
    return PtPreconditioner(
        variant="ExactDense",
        S3=S3,
        n_pressure=layout.block_length(5),
        permute=interleave_permutation(layout),
        dense=DenseSolver(S3, cap=cap),
    )


def pt_setup(
    S3: sp.csr_matrix,
    layout: BlockLayout,
    variant: str,
    strong_threshold: float = 0.7,
    n_smooth: int = 2,
    coarse_cap: int = 64,
    dense_cap: int = DENSE_CAP,
) -> PtPreconditioner:
    """Dispatch on the variant name."""
    if variant == "CPR":
        return cpr_setup(
            S3, layout, strong_threshold=strong_threshold,
            n_smooth=n_smooth, coarse_cap=coarse_cap,
        )
    if variant == "SystemAMG":
        return samg_setup(
            S3, layout, strong_threshold=strong_threshold,
            n_smooth=n_smooth, coarse_cap=coarse_cap,
        )
    if variant == "ExactDense":
        return exact_setup(S3, layout, cap=dense_cap)
    raise ValueError(f"unknown variant {variant!r}; expected one of {PT_VARIANTS}")


def pt_inner_solver(pc: PtPreconditioner, inner_rtol: float, restart: int = 30,
                    max_iters: int = 60):
    """Wrap a variant as an inner Krylov solve to the given tolerance."""
    cfg = KrylovConfig(restart=restart, max_iters=max_iters, rtol=inner_rtol)

    def solve(r):
        x, _ = gmres(pc.S3, pc.apply, r, cfg)
        return x

    return solve
