"""
Contact-block regularization
----------------------------

The contact diagonal block is singular whenever a fracture cell sticks or
slides: the stick cell is nilpotent, the slide cell couples only the normal
column. The preprocessing transformation folds the interface-displacement
coupling back into the contact rows, and afterwards every cell is
invertible. This script shows the per-cell singular values before and
after, for each contact state.
"""

import numpy as np

from fracschur import MaterialParams, ProblemSpec, apply_transform, extract_block, generate

spec = ProblemSpec(
    refinement=6,
    states=("stick", "stick", "slide", "slide", "open", "open"),
    material=MaterialParams(dim=2),
    seed=1,
)
problem = generate(spec)
layout = problem.layout
d = layout.dim

J11 = extract_block(problem.matrix, layout, 1, 1).toarray()
ts = apply_transform(problem.matrix, layout)
J11t = extract_block(ts.J_tilde, layout, 1, 1).toarray()

print("per-cell singular values of the contact diagonal block:")
print(f"{'cell':>4s} {'state':>6s} {'original':>24s} {'transformed':>24s}")
for k, state in enumerate(layout.states):
    cell = J11[d * k:d * (k + 1), d * k:d * (k + 1)]
    cell_t = J11t[d * k:d * (k + 1), d * k:d * (k + 1)]
    sv = np.linalg.svd(cell, compute_uv=False)
    sv_t = np.linalg.svd(cell_t, compute_uv=False)
    fmt = lambda s: "[" + ", ".join(f"{v:.3f}" for v in s) + "]"
    print(f"{k:>4d} {state:>6s} {fmt(sv):>24s} {fmt(sv_t):>24s}")

print()
print("original sigma_min by state (0 means singular):")
for tag in ("stick", "slide", "open"):
    cells = [k for k, s in enumerate(layout.states) if s == tag]
    smin = min(
        np.linalg.svd(J11[d * k:d * (k + 1), d * k:d * (k + 1)], compute_uv=False)[-1]
        for k in cells
    )
    smin_t = min(
        np.linalg.svd(J11t[d * k:d * (k + 1), d * k:d * (k + 1)], compute_uv=False)[-1]
        for k in cells
    )
    print(f"  {tag:>6s}: original {smin:.2e}  transformed {smin_t:.2e}")

print()
cond = ts.J11_tilde_inv.conditions.max()
print(f"worst regularized cell condition number: {cond:.2f}")
print("the transformed block factors cleanly; the original would not.")
