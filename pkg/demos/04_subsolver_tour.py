"""
Inner subsolver tour
--------------------

The preconditioner delegates its stage solves to a small kit of classic
pieces: ILU(0), point-block ILU(0), SOR/SSOR sweeps, a Ruge-Stuben AMG
hierarchy, and a dense direct fallback. Each one on its home turf.
"""

import numpy as np
import scipy.sparse as sp

from fracschur import (
    amg_setup,
    amg_vcycle,
    block_ilu0_apply,
    block_ilu0_factor,
    dense_solve,
    ilu0_apply,
    ilu0_factor,
    sor_sweep,
)

rng = np.random.default_rng(0)

# --- ILU(0): exact on a tridiagonal matrix (no fill to drop)
A = sp.diags([-1.0, 2.0, -1.0], [-1, 0, 1], shape=(40, 40)).tocsr()
x = rng.standard_normal(40)
f = ilu0_factor(A)
print(f"ILU(0) on tridiagonal: max error {np.abs(ilu0_apply(f, A @ x) - x).max():.2e} "
      "(exact, the pattern admits no fill)")

# --- block ILU(0): exact on a block-tridiagonal matrix with 2x2 cells
cells = 20
blocks = rng.standard_normal((cells, 2, 2)) + 4 * np.eye(2)
off = 0.3 * rng.standard_normal((cells - 1, 2, 2))
B = sp.block_diag(blocks, format="lil")
for k in range(cells - 1):
    B[2 * k:2 * k + 2, 2 * k + 2:2 * k + 4] = off[k]
    B[2 * k + 2:2 * k + 4, 2 * k:2 * k + 2] = off[k].T
B = B.tocsr()
xb = rng.standard_normal(2 * cells)
fb = block_ilu0_factor(B, cell_size=2)
print(f"block ILU(0), 2x2 cells, block tridiagonal: max error "
      f"{np.abs(block_ilu0_apply(fb, B @ xb) - xb).max():.2e}")

# --- SOR: a few sweeps knock down the residual on a 1D Laplacian
L1 = sp.diags([-1.0, 2.0, -1.0], [-1, 0, 1], shape=(30, 30)).tocsr()
b = rng.standard_normal(30)
v = np.zeros(30)
r0 = np.linalg.norm(b)
for k in (1, 5, 20):
    v = np.zeros(30)
    for _ in range(k):
        v = sor_sweep(L1, v, b, omega=1.0)
    print(f"SOR, {k:>2d} sweep(s): residual reduced to "
          f"{np.linalg.norm(b - L1 @ v) / r0:.3f} of initial")

# --- AMG: hierarchy and V-cycle factor on a 2D 5-point Laplacian
one = sp.diags([-1.0, 2.0, -1.0], [-1, 0, 1], shape=(48, 48))
eye = sp.identity(48)
L2 = (sp.kron(one, eye) + sp.kron(eye, one)).tocsr()
h = amg_setup(L2, strong_threshold=0.25)
stats = h.stats()
print(f"AMG on {L2.shape[0]} unknowns: level sizes {stats['sizes']}, "
      f"operator complexity {stats['operator_complexity']:.2f}")
b2 = rng.standard_normal(L2.shape[0])
v2 = np.zeros_like(b2)
res = [np.linalg.norm(b2)]
for _ in range(8):
    v2 += amg_vcycle(h, b2 - L2 @ v2)
    res.append(np.linalg.norm(b2 - L2 @ v2))
factors = [res[i + 1] / res[i] for i in range(8)]
print(f"  V-cycle residual factors: {[f'{c:.3f}' for c in factors]}")

# --- dense fallback
M = rng.standard_normal((60, 60)) + 8 * np.eye(60)
r = rng.standard_normal(60)
res = np.linalg.norm(r - M @ dense_solve(M, r)) / np.linalg.norm(r)
print(f"dense direct solve, 60x60: relative residual {res:.2e}")
