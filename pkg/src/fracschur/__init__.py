"""Nested Schur-complement preconditioning for fracture contact
thermo-poromechanics block systems.

The package builds and applies a four-stage preconditioner for sparse
Jacobians organized in six unknown blocks (contact traction, interface
displacement, displacement, interface fluxes, pressure, temperature):
an exact contact elimination after a block right transform, a
fixed-stress stabilized mechanics decoupling, a diagonal flux
elimination, and a pressure-temperature solve by CPR or coupled AMG.
A synthetic problem generator, the inner subsolvers (ILU(0), block
ILU(0), SOR/SSOR, classical AMG, dense direct), restarted GMRES and
flexible GMRES drivers, and a CLI harness round out the toolbox.
"""

from .amg import AmgHierarchy, amg_setup, amg_vcycle
from .dense import DENSE_CAP, DenseSolver, dense_solve
from .errors import (
    DimensionMismatchError,
    FracschurError,
    NonFiniteOperatorError,
    SetupStageError,
    SingularBlockError,
    SparseFormatError,
    ZeroPivotError,
)
from .fixed_stress import (
    FixedStressCoeffs,
    SchurChain,
    build_chain,
    build_s2,
    build_s3,
    fixed_stress_frac,
    fixed_stress_pm,
    fixed_stress_thermal,
    stabilization_diagonal,
)
from .ilu import (
    BlockIlu0Factors,
    Ilu0Factors,
    block_ilu0_apply,
    block_ilu0_factor,
    ilu0_apply,
    ilu0_factor,
)
from .krylov import KrylovConfig, SolveReport, fgmres, gmres
from .materials import ContactState, MaterialParams
from .mmio import (
    read_layout,
    read_matrix_market,
    read_vector,
    write_layout,
    write_matrix_market,
    write_vector,
)
from .preconditioner import (
    AssembledPreconditioner,
    PreconditionerConfig,
    apply as precond_apply,
    setup as precond_setup,
    solve as run_solve,
)
from .problems import (
    GeneratedProblem,
    ProblemSpec,
    generate,
    reference_rhs,
    states_from_fractions,
)
from .pt_solvers import (
    PT_VARIANTS,
    PtPreconditioner,
    cpr_setup,
    exact_setup,
    interleave_permutation,
    pt_inner_solver,
    pt_setup,
    samg_setup,
)
from .relaxation import SorSmoother, sor_sweep
from .sparse import (
    BLOCK_NAMES,
    N_BLOCKS,
    STATE_TAGS,
    BlockLayout,
    Permutation,
    TrailingView,
    assemble_blocks,
    block_diag_csr,
    block_grid,
    ensure_canonical,
    extract_block,
    from_triplets,
    matmul,
    spmv,
)
from .transform import (
    BlockDiagInverse,
    TransformedSystem,
    apply_transform,
    build_qr,
    form_s1,
    invert_contact_block,
    recover_solution,
)

__version__ = "0.1.0"

__all__ = [
    "AmgHierarchy", "amg_setup", "amg_vcycle",
    "DENSE_CAP", "DenseSolver", "dense_solve",
    "FracschurError", "SparseFormatError", "DimensionMismatchError",
    "SingularBlockError", "ZeroPivotError", "SetupStageError",
    "NonFiniteOperatorError",
    "FixedStressCoeffs", "SchurChain", "build_chain", "build_s2", "build_s3",
    "fixed_stress_pm", "fixed_stress_frac", "fixed_stress_thermal",
    "stabilization_diagonal",
    "Ilu0Factors", "BlockIlu0Factors", "ilu0_factor", "ilu0_apply",
    "block_ilu0_factor", "block_ilu0_apply",
    "KrylovConfig", "SolveReport", "gmres", "fgmres",
    "ContactState", "MaterialParams",
    "read_matrix_market", "write_matrix_market", "read_layout", "write_layout",
    "read_vector", "write_vector",
    "PreconditionerConfig", "AssembledPreconditioner",
    "precond_setup", "precond_apply", "run_solve",
    "ProblemSpec", "GeneratedProblem", "generate", "reference_rhs",
    "states_from_fractions",
    "PT_VARIANTS", "PtPreconditioner", "cpr_setup", "samg_setup", "exact_setup",
    "pt_setup", "interleave_permutation", "pt_inner_solver",
    "SorSmoother", "sor_sweep",
    "BLOCK_NAMES", "N_BLOCKS", "STATE_TAGS", "BlockLayout", "Permutation",
    "TrailingView", "ensure_canonical", "from_triplets", "spmv", "matmul",
    "extract_block", "block_grid", "assemble_blocks", "block_diag_csr",
    "BlockDiagInverse", "TransformedSystem", "build_qr", "invert_contact_block",
    "apply_transform", "form_s1", "recover_solution",
    "__version__",
]
