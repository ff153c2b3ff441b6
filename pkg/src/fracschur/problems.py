"""Synthetic six-block test systems.

The generator builds structural surrogates of fracture contact
thermo-poromechanics Jacobians: graph Laplacians and upwind stencils on a
uniform grid, a one-fracture chain of cells with two interface sides per
cell, and coupling blocks whose magnitudes are tied to the material
constants so the fixed-stress stabilization faces the coupling strength it
was derived for. Every entry is deterministic in the seed.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
import scipy.sparse as sp

from .errors import DimensionMismatchError
from .materials import ContactState, MaterialParams
from .sparse import BlockLayout, ensure_canonical

# Relative coupling magnitudes. The mechanics blocks live on a unit elastic
# scale, the flow/heat blocks on the accumulation scale rho*V/dt times the
# storage coefficient; the divergence coupling is calibrated so the true
# mechanics Schur contribution on the pressure diagonal matches the
# fixed-stress increment (see _DIV_GRAM).
_C = {
    "w0": 1.0,                 # contact -> interface displacement weight
    "q0": 0.8,                 # interface displacement -> contact weight
    "delta": 2.0,              # interface displacement cell diagonal
    "j22_random": 0.2,         # symmetric random part of the J22 cells
    "j22_chain": 0.2,          # same-side neighbor coupling in J22
    "eta_stick": 0.1,          # off-diagonal of the (singular) stick cells
    "open_relief": 0.1,        # weak normal coupling kept by open cells
    "kappa_lo": 0.3,           # slide tangential row multiplier range
    "kappa_hi": 0.7,
    "spring": 1.0,             # interface <-> host displacement tie
    "displacement_mass": 0.05,  # diagonal regularization of J33
    "traction_force": 0.3,     # J31: traction load on host cells
    "interface_pressure": 0.3,  # J25: fracture pressure opens interfaces
    "interface_temperature": 0.1,  # J26
    "thermal_force": 0.3,      # J36 relative to the divergence coupling
    "compression_heat": 0.05,  # J63 relative to the divergence coupling
    "aperture_storage": 0.05,  # J52: normal jump feeds fracture storage
    "shear_heat": 0.02,        # J62
    "traction_storage": 0.02,  # J51
    "traction_heat": 0.01,     # J61
    "flux_diag": 1.0,          # J44 diagonal
    "flux_advect": 0.3,        # J44: advective heat flux carries mass flux
    "flux_pressure": 0.5,      # J45
    "flux_temp_conductive": 0.5,  # J46, q rows
    "flux_temp_advective": 0.3,   # J46, w rows
    "mass_div": 0.5,           # J54
    "heat_div": 0.3,           # J64
    "permeability": 1.0e-13,   # m^2, matrix
    "viscosity": 1.002e-3,     # Pa s
    "frac_perm_contrast": 20.0,
    "conduction_ratio": 1.0,   # heat conduction vs accumulation
    "drift": (1.0, 0.35, 0.15),
}

# Representative diagonal of B J33^-1 B^T for the divergence stencil below,
# per spatial dimension, measured once on mid-size grids (0.327-0.336 across
# 2D m in {10,16} and 3D m in {6,8}) and frozen. It normalizes the
# mechanics-flow coupling so the true Schur contribution on the pressure
# diagonal matches the fixed-stress increment scale * L_pm.
_DIV_GRAM = {2: 0.33, 3: 0.33}


@dataclass(frozen=True)
class ProblemSpec:
    """Everything the generator needs to build one system."""

    refinement: int
    states: tuple
    material: MaterialParams = field(default_factory=MaterialParams)
    n_fracture_cells: int | None = None
    peclet_scale: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.refinement < 2:
            raise ValueError("refinement must be at least 2 cells per side")
        if self.peclet_scale <= 0:
            raise ValueError("peclet_scale must be positive")
        states = tuple(
            s if isinstance(s, ContactState) else ContactState.from_tag(s)
            for s in self.states
        )
        object.__setattr__(self, "states", states)
        n_f = self.resolved_fracture_cells
        if n_f < 1:
            raise ValueError("need at least one fracture cell")
        if len(states) != n_f:
            raise ValueError(
                f"{len(states)} states for {n_f} fracture cells"
            )

    @property
    def resolved_fracture_cells(self) -> int:
        return self.refinement if self.n_fracture_cells is None else self.n_fracture_cells

    def to_json_dict(self) -> dict:
        return {
            "refinement": self.refinement,
            "n_fracture_cells": self.resolved_fracture_cells,
            "states": [s.tag for s in self.states],
            "dim": self.material.dim,
            "peclet_scale": self.peclet_scale,
            "seed": self.seed,
            # The relative size of the contact coupling rows is a modeling
            # choice of this generator, not a quantity fixed by the material
            # data, so every report echoes the weights that were used.
            "contact_coupling_choice": {
                "contact_to_interface": _C["w0"],
                "interface_to_contact": _C["q0"],
            },
        }


@dataclass(frozen=True, eq=False)
class GeneratedProblem:
    matrix: sp.csr_matrix
    layout: BlockLayout
    rhs: np.ndarray
    spec: ProblemSpec
    x_true: np.ndarray


def states_from_fractions(n: int, fractions: dict, seed: int = 0) -> tuple:
    """Deterministic state assignment matching the requested fractions.

    Counts follow largest-remainder rounding, then the sequence is shuffled
    by a generator seeded from ``seed`` so the states mix spatially.
    """
    if n < 1:
        raise ValueError("need at least one fracture cell")
    tags = []
    weights = []
    for tag, w in fractions.items():
        ContactState.from_tag(tag)
        if w < 0:
            raise ValueError(f"negative fraction for state {tag!r}")
        tags.append(tag)
        weights.append(float(w))
    total = sum(weights)
    if total <= 0:
        raise ValueError("state fractions sum to zero")
    quotas = [w / total * n for w in weights]
    counts = [int(q) for q in quotas]
    short = n - sum(counts)
    remainders = sorted(
        range(len(tags)), key=lambda i: (quotas[i] - counts[i], -i), reverse=True
    )
    for i in remainders[:short]:
        counts[i] += 1
    states = [ContactState.from_tag(t) for t, c in zip(tags, counts) for _ in range(c)]
    rng = np.random.default_rng(seed)
    order = rng.permutation(n)
    return tuple(states[i] for i in order)


class _Grid:
    """Uniform m^dim cell grid with a fracture chain and its host cells."""

    def __init__(self, m: int, dim: int, n_f: int):
        self.m = m
        self.dim = dim
        self.n_cells = m**dim
        base = (m - 1) // 2
        path = []
        if dim == 2:
            capacity = (m - 1 - base) * m
        else:
            capacity = m * m
        if n_f > capacity:
            raise ValueError(
                f"{n_f} fracture cells exceed the capacity {capacity} of a "
                f"{m}^{dim} grid"
            )
        for k in range(n_f):
            row, pos = divmod(k, m)
            x = pos if row % 2 == 0 else m - 1 - pos
            if dim == 2:
                path.append((x, base + row))
            else:
                path.append((x, row, base))
        self.path = path

    def cell_id(self, coords) -> int:
        idx = 0
        for c in reversed(coords):
            idx = idx * self.m + c
        return idx

    def host(self, k: int, side: int) -> int:
        """Matrix cell carrying interface side 0/1 of fracture cell k."""
        coords = list(self.path[k])
        coords[-1] += side
        return self.cell_id(coords)

    def neighbor_pairs(self, axis: int) -> tuple:
        """(lower, upper) cell ids of every interior face along one axis."""
        m, dim = self.m, self.dim
        shape = (m,) * dim
        ids = np.arange(self.n_cells).reshape(shape[::-1])
        # ids is indexed [z][y][x] (last coordinate fastest)
        np_axis = dim - 1 - axis
        lo = np.take(ids, np.arange(m - 1), axis=np_axis).ravel()
        hi = np.take(ids, np.arange(1, m), axis=np_axis).ravel()
        return lo, hi


class _Builder:
    def __init__(self, n: int):
        self.n = n
        self.rows = []
        self.cols = []
        self.vals = []

    def add(self, rows, cols, vals):
        rows = np.atleast_1d(np.asarray(rows, dtype=np.int64))
        cols = np.atleast_1d(np.asarray(cols, dtype=np.int64))
        vals = np.atleast_1d(np.asarray(vals, dtype=np.float64))
        rows, cols, vals = np.broadcast_arrays(rows, cols, vals)
        self.rows.append(rows.ravel())
        self.cols.append(cols.ravel())
        self.vals.append(vals.ravel())

    def add_dense(self, row0: int, col0: int, block: np.ndarray):
        k, l = block.shape
        r = np.repeat(np.arange(k), l) + row0
        c = np.tile(np.arange(l), k) + col0
        self.add(r, c, block.ravel())

    def tocsr(self) -> sp.csr_matrix:
        rows = np.concatenate(self.rows)
        cols = np.concatenate(self.cols)
        vals = np.concatenate(self.vals)
        return ensure_canonical(
            sp.coo_matrix((vals, (rows, cols)), shape=(self.n, self.n))
        )


def _laplacian_pairs(b: _Builder, offset: int, lo, hi, weight: float, stride: int = 1,
                     comp: int = 0):
    """Add a symmetric graph-Laplacian face contribution to the builder."""
    r_lo = offset + lo * stride + comp
    r_hi = offset + hi * stride + comp
    b.add(r_lo, r_lo, weight)
    b.add(r_hi, r_hi, weight)
    b.add(r_lo, r_hi, -weight)
    b.add(r_hi, r_lo, -weight)


def _upwind_pairs(b: _Builder, offset: int, lo, hi, speed: float):
    """Add an upwind convection face contribution; flow goes lo -> hi."""
    r_lo = offset + lo
    r_hi = offset + hi
    b.add(r_lo, r_lo, speed)
    b.add(r_hi, r_lo, -speed)


def _contact_cell(state: ContactState, d: int, kappa: np.ndarray) -> np.ndarray:
    block = np.zeros((d, d))
    if state is ContactState.OPEN:
        return np.eye(d)
    if state is ContactState.STICK:
        for t in range(d - 1):
            block[t, t + 1] = _C["eta_stick"]
        return block
    block[0, 0] = 1.0
    for t in range(1, d):
        block[t, 0] = kappa[t - 1]
    return block


def _contact_coupling(state: ContactState, d: int) -> np.ndarray:
    """Diagonal of the J12 cell for one interface side (before the sign)."""
    if state is ContactState.OPEN:
        scaled = np.zeros(d)
        scaled[0] = _C["open_relief"] * _C["w0"]
        return np.diag(scaled)
    if state is ContactState.STICK:
        return _C["w0"] * np.eye(d)
    scaled = np.full(d, _C["w0"])
    scaled[0] = 0.0
    return np.diag(scaled)


def build_layout(spec: ProblemSpec) -> BlockLayout:
    m = spec.refinement
    d = spec.material.dim
    n_f = spec.resolved_fracture_cells
    n_cells = m**d
    sizes = (
        d * n_f,
        2 * d * n_f,
        d * n_cells,
        6 * n_f,
        n_cells + n_f,
        n_cells + n_f,
    )
    ranges = []
    pos = 0
    for size in sizes:
        ranges.append((pos, pos + size))
        pos += size
    mat = spec.material
    # Flow and energy rows are emitted pre-divided by the matrix accumulation
    # coefficient (see generate), so the stabilization multiplier is the
    # accumulation scale divided by that same coefficient.
    storativity = mat.porosity_ref * mat.compressibility + mat.derived_inverse_M
    return BlockLayout(
        dim=d,
        block_ranges=tuple(ranges),
        fracture_cells=n_f,
        states=tuple(s.tag for s in spec.states),
        sides=2,
        intersection_cells=0,
        fs_scale=1.0 / storativity,
    )


def generate(spec: ProblemSpec) -> GeneratedProblem:
    """Build the matrix, layout, and manufactured right-hand side."""
    mat = spec.material
    m, d, n_f = spec.refinement, mat.dim, spec.resolved_fracture_cells
    grid = _Grid(m, d, n_f)
    layout = build_layout(spec)
    n = layout.n
    o = [layout.block_range(i)[0] for i in range(1, 7)]
    o1, o2, o3, o4, o5, o6 = o
    n_cells = grid.n_cells

    rng = np.random.default_rng(spec.seed)
    # draw order is fixed: J22 cell randomness, slide multipliers, x_true
    j22_rand = rng.uniform(-1.0, 1.0, size=(2 * n_f, d, d))
    kappa = rng.uniform(_C["kappa_lo"], _C["kappa_hi"], size=(n_f, d - 1))

    scale = mat.accumulation_scale
    gamma = mat.compressibility
    a_pm = scale * (mat.porosity_ref * gamma + mat.derived_inverse_M)
    a_frac = scale * mat.fracture_porosity * gamma
    t_m = scale * _C["permeability"] / _C["viscosity"]
    t_f = _C["frac_perm_contrast"] * t_m
    t_c = _C["conduction_ratio"] * a_pm
    g_e = _C["spring"]
    theta_pm = (mat.biot**2 / mat.drained_modulus) / (
        mat.porosity_ref * gamma + mat.derived_inverse_M
    )
    s_div = np.sqrt(theta_pm * a_pm / _DIV_GRAM[d])

    b = _Builder(n)

    def iface(k: int, side: int) -> int:
        """Interface-displacement cell index of side ``side`` at cell ``k``."""
        return 2 * k + side

    sign = (1.0, -1.0)

    # --- contact rows: J11 cells and J12 coupling to both interface sides
    for k, state in enumerate(spec.states):
        b.add_dense(o1 + d * k, o1 + d * k, _contact_cell(state, d, kappa[k]))
        coupling = _contact_coupling(state, d)
        for s in (0, 1):
            b.add_dense(o1 + d * k, o2 + d * iface(k, s), sign[s] * coupling)

    # --- interface displacement rows: J21, J22, J23, J25, J26
    for k, state in enumerate(spec.states):
        for s in (0, 1):
            c2 = iface(k, s)
            b.add_dense(o2 + d * c2, o1 + d * k, sign[s] * _C["q0"] * np.eye(d))
            cell = _C["delta"] * np.eye(d) + _C["j22_random"] * 0.5 * (
                j22_rand[c2] + j22_rand[c2].T
            )
            b.add_dense(o2 + d * c2, o2 + d * c2, g_e * cell)
            if k + 1 < n_f:
                tie = _C["j22_chain"] * g_e * np.eye(d)
                c2n = iface(k + 1, s)
                b.add_dense(o2 + d * c2, o2 + d * c2n, tie)
                b.add_dense(o2 + d * c2n, o2 + d * c2, tie)
            host = grid.host(k, s)
            b.add_dense(o2 + d * c2, o3 + d * host, -g_e * np.eye(d))
            b.add(o2 + d * c2, o5 + n_cells + k, sign[s] * _C["interface_pressure"] * g_e)
            b.add(o2 + d * c2, o6 + n_cells + k, sign[s] * _C["interface_temperature"] * g_e)

    # --- displacement rows: J31, J32, J33, J35, J36
    for k in range(n_f):
        for s in (0, 1):
            host = grid.host(k, s)
            b.add_dense(o3 + d * host, o1 + d * k, sign[s] * _C["traction_force"] * g_e * np.eye(d))
            b.add_dense(o3 + d * host, o2 + d * iface(k, s), -g_e * np.eye(d))
            b.add_dense(o3 + d * host, o3 + d * host, g_e * np.eye(d))
    cell_ids = np.arange(n_cells)
    b.add(o3 + d * cell_ids[:, None] + np.arange(d),
          o3 + d * cell_ids[:, None] + np.arange(d),
          _C["displacement_mass"] * g_e)
    for axis in range(d):
        lo, hi = grid.neighbor_pairs(axis)
        for comp in range(d):
            _laplacian_pairs(b, o3, lo, hi, g_e, stride=d, comp=comp)

    # divergence stencil B: pressure cell row <- displacement components,
    # central differences inside, one-sided at the boundary
    div_rows, div_cols, div_vals = [], [], []
    for axis in range(d):
        lo, hi = grid.neighbor_pairs(axis)
        # cell hi contributes +1/2 to the row of lo and cell lo -1/2 to hi
        div_rows.extend([lo, hi])
        div_cols.extend([d * hi + axis, d * lo + axis])
        div_vals.extend([np.full(lo.size, 0.5), np.full(hi.size, -0.5)])
    div_rows = np.concatenate(div_rows)
    div_cols = np.concatenate(div_cols)
    div_vals = np.concatenate(div_vals)
    # J53 = +s B, J35 = -s B^T, J63 and J36 are scaled copies
    b.add(o5 + div_rows, o3 + div_cols, s_div * div_vals)
    b.add(o3 + div_cols, o5 + div_rows, -s_div * div_vals)
    b.add(o6 + div_rows, o3 + div_cols, _C["compression_heat"] * s_div * div_vals)
    b.add(o3 + div_cols, o6 + div_rows, -_C["thermal_force"] * s_div * div_vals)

    # --- interface flux rows (type-major: v, w, q): J44, J45, J46
    for k in range(n_f):
        for s in (0, 1):
            i = iface(k, s)
            v_row = o4 + i
            w_row = o4 + 2 * n_f + i
            q_row = o4 + 4 * n_f + i
            p_host = o5 + grid.host(k, s)
            p_frac = o5 + n_cells + k
            t_host = o6 + grid.host(k, s)
            t_frac = o6 + n_cells + k
            for r in (v_row, w_row, q_row):
                b.add(r, r, _C["flux_diag"] * a_pm)
            b.add(w_row, v_row, _C["flux_advect"] * a_pm)
            b.add(v_row, p_host, _C["flux_pressure"] * a_pm)
            b.add(v_row, p_frac, -_C["flux_pressure"] * a_pm)
            b.add(w_row, t_host, _C["flux_temp_advective"] * a_pm)
            b.add(w_row, t_frac, -_C["flux_temp_advective"] * a_pm)
            b.add(q_row, t_host, _C["flux_temp_conductive"] * a_pm)
            b.add(q_row, t_frac, -_C["flux_temp_conductive"] * a_pm)
            # J54 / J64: flux divergence feeds the balance rows
            b.add(p_frac, v_row, -_C["mass_div"] * a_pm)
            b.add(p_host, v_row, _C["mass_div"] * a_pm)
            for r in (w_row, q_row):
                b.add(t_frac, r, -_C["heat_div"] * a_pm)
                b.add(t_host, r, _C["heat_div"] * a_pm)

    # --- pressure rows: J51, J52, J55, J56
    for k in range(n_f):
        p_frac = o5 + n_cells + k
        t_frac = o6 + n_cells + k
        b.add(p_frac, o1 + d * k, _C["traction_storage"] * a_pm)
        b.add(t_frac, o1 + d * k, _C["traction_heat"] * a_pm)
        b.add(p_frac, p_frac, a_frac)
        b.add(t_frac, t_frac, a_pm)
        for s in (0, 1):
            b.add(p_frac, o2 + d * iface(k, s), sign[s] * _C["aperture_storage"] * a_pm)
            b.add(t_frac, o2 + d * iface(k, s), sign[s] * _C["shear_heat"] * a_pm)
            host = grid.host(k, s)
            _laplacian_pairs(b, 0, o5 + host, p_frac, t_m)
            _laplacian_pairs(b, 0, o6 + host, t_frac, t_c)
        if k + 1 < n_f:
            _laplacian_pairs(b, 0, p_frac, p_frac + 1, t_f)
            _laplacian_pairs(b, 0, t_frac, t_frac + 1, t_c)
    b.add(o5 + cell_ids, o5 + cell_ids, a_pm)
    b.add(o6 + cell_ids, o6 + cell_ids, a_pm)
    b.add(o5 + cell_ids, o6 + cell_ids, -0.1 * a_pm)
    b.add(o5 + n_cells + np.arange(n_f), o6 + n_cells + np.arange(n_f), -0.1 * a_pm)
    b.add(o6 + cell_ids, o5 + cell_ids, 0.1 * a_pm)
    b.add(o6 + n_cells + np.arange(n_f), o5 + n_cells + np.arange(n_f), 0.1 * a_pm)
    for axis in range(d):
        lo, hi = grid.neighbor_pairs(axis)
        _laplacian_pairs(b, o5, lo, hi, t_m)
        _laplacian_pairs(b, o6, lo, hi, t_c)
        speed = spec.peclet_scale * t_c * _C["drift"][axis]
        _upwind_pairs(b, o6, lo, hi, speed)
    # fast advection along the fracture chain
    frac_ids = o6 + n_cells + np.arange(n_f - 1)
    if n_f > 1:
        speed = spec.peclet_scale * t_c * _C["drift"][0] * _C["frac_perm_contrast"]
        _upwind_pairs(b, 0, frac_ids, frac_ids + 1, speed)

    J = b.tocsr()

    # Equilibrate the mass and energy balance rows: physical accumulation and
    # transmissibility coefficients sit many orders of magnitude below the
    # O(1) contact and elasticity entries, and leaving them in place makes
    # the assembled system so ill conditioned that backward-stable solves
    # cannot pin down the solution. Dividing rows of blocks 5 and 6 by the
    # matrix accumulation coefficient brings every equation to unit scale
    # without touching the unknowns; the layout records both the row scaling
    # and the matching fixed-stress multiplier.
    row_scale = np.ones(n)
    row_scale[o5:] = 1.0 / a_pm
    J = ensure_canonical(sp.diags(row_scale).tocsr() @ J)
    layout = replace(layout, row_scale=row_scale)

    x_true = rng.standard_normal(n)
    x_true /= np.linalg.norm(x_true)
    rhs = J @ x_true
    return GeneratedProblem(matrix=J, layout=layout, rhs=rhs, spec=spec, x_true=x_true)


def reference_rhs(problem: GeneratedProblem, x_true) -> np.ndarray:
    """Right-hand side with a known solution: J x_true."""
    x_true = np.asarray(x_true, dtype=np.float64)
    if x_true.shape[0] != problem.layout.n:
        raise DimensionMismatchError(
            f"x_true has length {x_true.shape[0]}, system size is {problem.layout.n}"
        )
    return problem.matrix @ x_true
