"""Assembly and application of the full nested preconditioner.

Setup runs the cascade once: right transform, exact contact elimination,
fixed-stress mechanics decoupling, diagonal flux elimination, and the
pressure-temperature subsolver. Application is strict back substitution
through the four stages, so the preconditioned operator acts like the unit
block lower-triangular factor of the transformed system.

``exact_mode`` swaps every approximation for a dense exact counterpart
(true Schur complements, direct stage solves); it exists so the
exact-arithmetic convergence argument is executable, not as a production
path.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.sparse as sp

from .amg import AmgHierarchy, amg_setup, amg_vcycle
from .dense import DENSE_CAP, DenseSolver
from .errors import (
    DimensionMismatchError,
    NonFiniteOperatorError,
    SetupStageError,
    SingularBlockError,
    ZeroPivotError,
)
from .fixed_stress import (
    FixedStressCoeffs,
    SchurChain,
    build_chain,
    fixed_stress_thermal,
)
from .ilu import ilu0_apply
from .krylov import KrylovConfig, SolveReport, fgmres, gmres
from .materials import MaterialParams
from .pt_solvers import PT_VARIANTS, PtPreconditioner, pt_setup
from .sparse import BlockLayout, ensure_canonical
from .transform import TransformedSystem, apply_transform, form_s1, recover_solution


@dataclass(frozen=True)
class PreconditionerConfig:
    """Knobs of the nested preconditioner."""

    pt_variant: str = "CPR"
    exact_mode: bool = False
    mech_smoother: str | None = None  # None: sor in 2D, block_ilu0 in 3D
    amg_threshold: float = 0.7
    thermal_stab: bool = False
    n_smooth: int = 2
    coarse_cap: int = 64
    dense_cap: int = DENSE_CAP

    def __post_init__(self):
        if self.pt_variant not in PT_VARIANTS:
            raise ValueError(
                f"pt_variant {self.pt_variant!r} not one of {PT_VARIANTS}"
            )
        if self.mech_smoother not in (None, "sor", "ssor", "block_ilu0"):
            raise ValueError(f"unknown mechanics smoother {self.mech_smoother!r}")
        if not 0.0 < self.amg_threshold <= 1.0:
            raise ValueError("amg_threshold must lie in (0, 1]")
        if self.n_smooth < 1:
            raise ValueError("n_smooth must be at least 1")

    def to_json_dict(self) -> dict:
        return {
            "pt_variant": self.pt_variant,
            "exact_mode": self.exact_mode,
            "mech_smoother": self.mech_smoother,
            "amg_threshold": self.amg_threshold,
            "thermal_stab": self.thermal_stab,
            "n_smooth": self.n_smooth,
            "coarse_cap": self.coarse_cap,
            "dense_cap": self.dense_cap,
        }


@dataclass(eq=False)
class AssembledPreconditioner:
    """Immutable bundle of the stage operators; ``apply`` is a fixed linear map."""

    transformed: TransformedSystem
    layout: BlockLayout
    config: PreconditionerConfig
    coeffs: FixedStressCoeffs
    chain: SchurChain | None
    mech_amg: AmgHierarchy | None
    pt: PtPreconditioner
    mech_matrix: sp.csr_matrix
    coupling_mech: sp.csr_matrix  # blocks (2,5),(2,6),(3,5),(3,6)
    coupling_flux: sp.csr_matrix  # blocks (4,5),(4,6)
    J12: sp.csr_matrix
    solve_mech: callable
    solve_flux: callable
    timings: dict = field(default_factory=dict)
    exact_S2: np.ndarray | None = None
    exact_S3: np.ndarray | None = None

    def apply(self, r) -> np.ndarray:
        return apply(self, r)

    def inner_accelerated(self, inner_rtol: float, restart: int = 30,
                          max_iters: int = 60):
        """Nonstationary variant: every stage becomes an inner Krylov solve.

        The returned callable is meant as the preconditioner of a flexible
        outer iteration; each inner solve is preconditioned by the
        corresponding stationary stage.
        """
        if self.chain is None:
            raise SetupStageError(
                "inner_accel", "inner acceleration requires the production chain"
            )
        cfg = KrylovConfig(restart=restart, max_iters=max_iters, rtol=inner_rtol)
        pt_op = self.pt.S3

        def solve_pt(r):
            x, _ = gmres(pt_op, self.pt.apply, r, cfg)
            return x

        mech_op = self.mech_matrix

        def solve_mech(r):
            x, _ = gmres(mech_op, self.solve_mech, r, cfg)
            return x

        n4 = self.layout.block_length(4)
        flux_op = self.chain.S2[:n4, :n4]

        def solve_flux(r):
            x, _ = gmres(flux_op, self.solve_flux, r, cfg)
            return x

        def apply_inner(r):
            return _cascade(self, r, solve_pt, solve_flux, solve_mech)

        return apply_inner

    def stats(self) -> dict:
        out = {
            "contact_condition_max": self.transformed.J11_tilde_inv.condition_max,
            "pt": self.pt.stats(),
        }
        if self.mech_amg is not None:
            out["mech_amg"] = self.mech_amg.stats()
        return out


def _timed(timings: dict, stage: str, fn):
    t0 = time.perf_counter()
    try:
        result = fn()
    except (SingularBlockError, ZeroPivotError, DimensionMismatchError, ValueError) as exc:
        raise SetupStageError(stage, str(exc)) from exc
    timings[f"setup_{stage}_ms"] = (time.perf_counter() - t0) * 1e3
    return result


def setup(
    J: sp.csr_matrix,
    layout: BlockLayout,
    material: MaterialParams,
    cfg: PreconditionerConfig | None = None,
) -> AssembledPreconditioner:
    """Build every stage of the preconditioner for a fixed matrix."""
    cfg = cfg or PreconditionerConfig()
    J = ensure_canonical(J)
    if J.shape != (layout.n, layout.n):
        raise DimensionMismatchError(
            f"matrix has shape {J.shape}, layout expects size {layout.n}"
        )
    if material.dim != layout.dim:
        raise ValueError(
            f"material dimension {material.dim} disagrees with layout dimension {layout.dim}"
        )
    if cfg.exact_mode and layout.n > cfg.dense_cap:
        raise ValueError(
            f"exact mode is a dense oracle, usable only up to n = {cfg.dense_cap} "
            f"(got {layout.n})"
        )
    timings: dict = {}

    def _transform():
        try:
            return apply_transform(J, layout)
        except SingularBlockError as exc:
            stage = (
                "build_qr"
                if exc.where == "interface displacement diagonal"
                else "invert_contact_block"
            )
            raise SetupStageError(stage, str(exc)) from exc

    t0 = time.perf_counter()
    ts = _transform()
    timings["setup_transform_ms"] = (time.perf_counter() - t0) * 1e3

    S1, view1 = _timed(timings, "form_s1", lambda: form_s1(ts))
    scale = layout.fs_scale if layout.fs_scale is not None else 1.0
    coeffs = FixedStressCoeffs.from_material(material, scale=scale)

    n23 = view1.block_range(4)[0]
    mech_matrix = ensure_canonical(S1[:n23, :n23])
    o5 = layout.block_range(5)[0]
    o2 = layout.block_range(2)[0]
    o4 = layout.block_range(4)[0]
    coupling_mech = ensure_canonical(J[o2:o4, o5:])
    coupling_flux = ensure_canonical(J[o4:o5, o5:])
    J12 = ts.J_tilde[layout.block_slice(1), layout.block_slice(2)]

    if cfg.exact_mode:
        S1d = S1.toarray()
        n4 = layout.block_length(4)

        def _exact_chain():
            A = S1d[:n23, :n23]
            B = S1d[:n23, n23:]
            C = S1d[n23:, :n23]
            D = S1d[n23:, n23:]
            S2 = D - C @ scipy.linalg.solve(A, B)
            J44 = S2[:n4, :n4]
            S3 = S2[n4:, n4:] - S2[n4:, :n4] @ scipy.linalg.solve(J44, S2[:n4, n4:])
            return S2, S3

        exact_S2, exact_S3 = _timed(timings, "exact_schur", _exact_chain)
        mech_solver = _timed(
            timings, "mech_dense", lambda: DenseSolver(mech_matrix, cap=cfg.dense_cap)
        )
        flux_solver = _timed(
            timings, "flux_dense",
            lambda: DenseSolver(exact_S2[:n4, :n4], cap=cfg.dense_cap),
        )
        pt = _timed(
            timings, "pt_setup",
            lambda: pt_setup(
                sp.csr_matrix(exact_S3), layout, "ExactDense", dense_cap=cfg.dense_cap
            ),
        )
        return AssembledPreconditioner(
            transformed=ts, layout=layout, config=cfg, coeffs=coeffs,
            chain=None, mech_amg=None, pt=pt, mech_matrix=mech_matrix,
            coupling_mech=coupling_mech, coupling_flux=coupling_flux, J12=J12,
            solve_mech=mech_solver.solve, solve_flux=flux_solver.solve,
            timings=timings, exact_S2=exact_S2, exact_S3=exact_S3,
        )

    thermal_coeff = fixed_stress_thermal(material) if cfg.thermal_stab else None
    chain = _timed(
        timings, "build_chain",
        lambda: build_chain(
            S1, layout, coeffs, thermal=cfg.thermal_stab, thermal_coeff=thermal_coeff
        ),
    )
    smoother = cfg.mech_smoother or ("sor" if layout.dim == 2 else "block_ilu0")
    mech_amg = _timed(
        timings, "mech_amg",
        lambda: amg_setup(
            mech_matrix,
            strong_threshold=cfg.amg_threshold,
            smoother=smoother,
            n_smooth=cfg.n_smooth,
            block_size=layout.dim,
            coarse_cap=cfg.coarse_cap,
        ),
    )
    pt = _timed(
        timings, "pt_setup",
        lambda: pt_setup(
            chain.S3, layout, cfg.pt_variant,
            strong_threshold=cfg.amg_threshold, n_smooth=cfg.n_smooth,
            coarse_cap=cfg.coarse_cap, dense_cap=cfg.dense_cap,
        ),
    )
    ilu_J44 = chain.ilu_J44
    return AssembledPreconditioner(
        transformed=ts, layout=layout, config=cfg, coeffs=coeffs,
        chain=chain, mech_amg=mech_amg, pt=pt, mech_matrix=mech_matrix,
        coupling_mech=coupling_mech, coupling_flux=coupling_flux, J12=J12,
        solve_mech=lambda r: amg_vcycle(mech_amg, r),
        solve_flux=lambda r: ilu0_apply(ilu_J44, r),
        timings=timings,
    )


def _checked_stage(v: np.ndarray, stage: str) -> np.ndarray:
    if not np.all(np.isfinite(v)):
        raise NonFiniteOperatorError(
            f"preconditioner stage '{stage}' produced non-finite values", where=stage
        )
    return v


def _cascade(pc: AssembledPreconditioner, r, solve_pt, solve_flux, solve_mech):
    """Back substitution through the four stages.

    1. pressure-temperature solve on [r5; r6]
    2. interface fluxes from r4 minus the p/T coupling
    3. mechanics (interface displacement + displacement) the same way
    4. contact unknowns through the regularized diagonal
    """
    layout = pc.layout
    r = np.asarray(r, dtype=np.float64)
    if r.shape[0] != layout.n:
        raise DimensionMismatchError(
            f"preconditioner apply: length {r.shape[0]}, expected {layout.n}"
        )
    o2 = layout.block_range(2)[0]
    o4 = layout.block_range(4)[0]
    o5 = layout.block_range(5)[0]

    v56 = _checked_stage(solve_pt(r[o5:]), "pressure-temperature")
    v4 = _checked_stage(solve_flux(r[o4:o5] - pc.coupling_flux @ v56), "interface-flux")
    vm = _checked_stage(solve_mech(r[o2:o4] - pc.coupling_mech @ v56), "mechanics")
    n2 = layout.block_length(2)
    v1 = _checked_stage(
        pc.transformed.solve_contact(r[:o2] - pc.J12 @ vm[:n2]), "contact"
    )
    return np.concatenate([v1, vm, v4, v56])


def apply(pc: AssembledPreconditioner, r) -> np.ndarray:
    """One application of the assembled preconditioner (fixed linear map)."""
    return _cascade(pc, r, pc.pt.apply, pc.solve_flux, pc.solve_mech)


def solve(
    J: sp.csr_matrix,
    layout: BlockLayout,
    material: MaterialParams,
    cfg: PreconditionerConfig | None = None,
    krylov_cfg: KrylovConfig | None = None,
    rhs=None,
    spec_echo: dict | None = None,
):
    """Set up, run the right-preconditioned outer iteration, recover x.

    Returns (x, SolveReport). Non-convergence is reported, not raised. With
    ``krylov_cfg.flexible`` the outer iteration is flexible GMRES and every
    stage is accelerated by an inner Krylov solve at ``inner_rtol``.
    """
    cfg = cfg or PreconditionerConfig()
    krylov_cfg = krylov_cfg or KrylovConfig()
    rhs = np.asarray(rhs, dtype=np.float64)
    if rhs.shape[0] != layout.n:
        raise DimensionMismatchError(
            f"rhs has length {rhs.shape[0]}, system size is {layout.n}"
        )
    pc = setup(J, layout, material, cfg)

    operator = pc.transformed.J_tilde
    if krylov_cfg.flexible and not cfg.exact_mode:
        prec = pc.inner_accelerated(krylov_cfg.inner_rtol)
        x_tilde, report = fgmres(operator, prec, rhs, krylov_cfg)
    else:
        x_tilde, report = gmres(operator, pc.apply, rhs, krylov_cfg)

    x = recover_solution(pc.transformed, x_tilde)

    norm_rhs = float(np.linalg.norm(rhs))
    residual = rhs - J @ x
    report.extra["original_system_relative_residual"] = (
        float(np.linalg.norm(residual) / norm_rhs) if norm_rhs else 0.0
    )
    report.coefficients = (
        pc.chain.coefficient_report() if pc.chain is not None
        else {**pc.coeffs.to_json_dict(), "exact_mode": True}
    )
    report.config["preconditioner"] = cfg.to_json_dict()
    report.extra.update(pc.stats())
    if spec_echo is not None:
        report.extra["problem"] = spec_echo
    report.timings.update(pc.timings)
    return x, report
