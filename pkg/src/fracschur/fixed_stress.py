"""Second- and third-level Schur complements.

The mechanics columns are decoupled with a fixed-stress stabilization F55
added cellwise to the pressure diagonal, and the interface-flux block is
eliminated through its diagonal, with ILU(0) factors of that block retained
for the preconditioner's back substitution.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import DimensionMismatchError, ZeroPivotError
from .ilu import Ilu0Factors, ilu0_factor
from .materials import MaterialParams
from .sparse import BlockLayout, TrailingView, ensure_canonical


def fixed_stress_pm(m: MaterialParams) -> float:
    """Porous-matrix stabilization coefficient alpha^2 / (2G/D + lambda), in 1/Pa."""
    return m.biot**2 / m.drained_modulus


def fixed_stress_frac(m: MaterialParams) -> float:
    """Fracture stabilization coefficient, in m/Pa.

    normal_jump * alpha^2 * gamma / (lambda * (1/M + phi * gamma)) with the
    fracture porosity phi (fully fluid-filled by default) and the inverse
    Biot modulus 1/M = (alpha - phi_ref)(1 - alpha)/(lambda + 2G/3).
    """
    inv_m = m.derived_inverse_M
    return (
        m.normal_jump
        * m.biot**2
        * m.compressibility
        / (m.lame_lambda * (inv_m + m.fracture_porosity * m.compressibility))
    )


def fixed_stress_thermal(m: MaterialParams) -> float:
    """Optional temperature stabilization coefficient c * (beta_s)^2 / (2G/D + lambda)."""
    return m.thermal_const * m.solid_thermal_expansion**2 / m.drained_modulus


@dataclass(frozen=True)
class FixedStressCoeffs:
    """Stabilization coefficients and the accumulation scale they multiply."""

    L_pm: float
    L_frac: float
    inverse_M: float
    scale: float

    def __post_init__(self):
        if self.L_pm <= 0:
            raise ValueError(f"porous-matrix coefficient must be positive, got {self.L_pm}")
        if self.L_frac < 0:
            raise ValueError(f"fracture coefficient must be nonnegative, got {self.L_frac}")
        if self.inverse_M <= 0:
            raise ValueError(f"inverse Biot modulus must be positive, got {self.inverse_M}")
        if self.scale < 0:
            raise ValueError(f"accumulation scale must be nonnegative, got {self.scale}")

    @classmethod
    def from_material(cls, m: MaterialParams, scale: float | None = None) -> "FixedStressCoeffs":
        return cls(
            L_pm=fixed_stress_pm(m),
            L_frac=fixed_stress_frac(m),
            inverse_M=m.derived_inverse_M,
            scale=m.accumulation_scale if scale is None else float(scale),
        )

    def to_json_dict(self) -> dict:
        return {
            "L_pm": self.L_pm,
            "L_frac": self.L_frac,
            "inverse_M": self.inverse_M,
            "scale": self.scale,
        }


def stabilization_diagonal(layout: BlockLayout, coeffs: FixedStressCoeffs) -> np.ndarray:
    """Per-pressure-cell diagonal of F55, ordered like the pressure block.

    Matrix cells receive scale * L_pm, fracture cells scale * L_frac, and
    intersection cells nothing (they carry no mechanics coupling).
    """
    kinds = layout.pressure_cell_kinds()
    diag = np.zeros(kinds.shape[0])
    diag[kinds == 0] = coeffs.scale * coeffs.L_pm
    diag[kinds == 1] = coeffs.scale * coeffs.L_frac
    return diag


def build_s2(
    S1: sp.csr_matrix,
    layout: BlockLayout,
    coeffs: FixedStressCoeffs,
    thermal: float | None = None,
) -> sp.csr_matrix:
    """Drop the mechanics blocks of S1 and stabilize the pressure diagonal.

    Returns the trailing system over blocks 4-6. ``thermal`` is an optional
    temperature-diagonal coefficient applied with the same accumulation
    scale on matrix and fracture cells; None leaves temperature untouched.
    """
    view1 = TrailingView(layout, 2)
    if S1.shape != (view1.n, view1.n):
        raise DimensionMismatchError(
            f"first Schur complement has size {S1.shape}, layout expects {view1.n}"
        )
    if thermal is not None and thermal < 0:
        raise ValueError(f"thermal stabilization coefficient must be nonnegative, got {thermal}")

    lo = view1.block_range(4)[0]
    S2 = ensure_canonical(S1[lo:, lo:])
    view2 = TrailingView(layout, 4)

    p_lo, p_hi = view2.block_range(5)
    f55 = stabilization_diagonal(layout, coeffs)
    rows = [np.arange(p_lo, p_hi, dtype=np.int64)]
    vals = [f55]
    if thermal is not None:
        t_lo, t_hi = view2.block_range(6)
        kinds = layout.pressure_cell_kinds()
        f66 = np.zeros(kinds.shape[0])
        f66[kinds != 2] = coeffs.scale * thermal
        rows.append(np.arange(t_lo, t_hi, dtype=np.int64))
        vals.append(f66)
    rows = np.concatenate(rows)
    vals = np.concatenate(vals)
    F = sp.csr_matrix((vals, (rows, rows)), shape=S2.shape)
    return ensure_canonical(S2 + F)


def build_s3(S2: sp.csr_matrix, layout: BlockLayout) -> tuple:
    """Eliminate the interface-flux block of S2 through its diagonal.

    Returns (S3, ilu_factors): the pressure-temperature system
    [S2_55, S2_56; S2_65, S2_66] - [S2_54; S2_64] diag(J44)^-1 [S2_45, S2_46]
    and the ILU(0) factors of J44 kept for the preconditioner.
    """
    view2 = TrailingView(layout, 4)
    if S2.shape != (view2.n, view2.n):
        raise DimensionMismatchError(
            f"second Schur complement has size {S2.shape}, layout expects {view2.n}"
        )
    lo = view2.block_range(5)[0]
    J44 = ensure_canonical(S2[:lo, :lo])
    diag = J44.diagonal()
    zero = np.flatnonzero(diag == 0.0)
    if zero.size:
        raise ZeroPivotError(
            f"interface-flux diagonal entry {int(zero[0])} is zero; "
            "cannot form the diagonal elimination",
            row=int(zero[0]),
        )
    coupling = S2[lo:, :lo] @ sp.diags(1.0 / diag) @ S2[:lo, lo:]
    S3 = ensure_canonical(S2[lo:, lo:] - coupling)
    return S3, ilu0_factor(J44)


@dataclass(frozen=True, eq=False)
class SchurChain:
    """Everything the preconditioner needs past the contact elimination."""

    S2: sp.csr_matrix
    S3: sp.csr_matrix
    F55: sp.csr_matrix
    coeffs: FixedStressCoeffs
    thermal_enabled: bool
    thermal_coeff: float
    ilu_J44: Ilu0Factors
    layout: BlockLayout

    def coefficient_report(self) -> dict:
        kinds = self.layout.pressure_cell_kinds()
        f55 = self.F55.diagonal()
        report = self.coeffs.to_json_dict()
        report["thermal_enabled"] = self.thermal_enabled
        if self.thermal_enabled:
            report["L_thermal"] = self.thermal_coeff
        report["f55_diagonal_norms"] = {
            "matrix": float(np.linalg.norm(f55[kinds == 0])),
            "fracture": float(np.linalg.norm(f55[kinds == 1])),
            "intersection": float(np.linalg.norm(f55[kinds == 2])),
        }
        return report


def build_chain(
    S1: sp.csr_matrix,
    layout: BlockLayout,
    coeffs: FixedStressCoeffs,
    thermal: bool = False,
    thermal_coeff: float | None = None,
) -> SchurChain:
    """Run the S2 and S3 constructions and package the results."""
    L_th = None
    if thermal:
        L_th = thermal_coeff
        if L_th is None:
            raise ValueError("thermal stabilization requested without a coefficient")
    S2 = build_s2(S1, layout, coeffs, thermal=L_th)
    S3, ilu_J44 = build_s3(S2, layout)
    n5 = layout.block_length(5)
    F55 = sp.diags(stabilization_diagonal(layout, coeffs), format="csr", shape=(n5, n5))
    return SchurChain(
        S2=S2,
        S3=S3,
        F55=ensure_canonical(F55),
        coeffs=coeffs,
        thermal_enabled=thermal,
        thermal_coeff=0.0 if L_th is None else float(L_th),
        ilu_J44=ilu_J44,
        layout=layout,
    )
