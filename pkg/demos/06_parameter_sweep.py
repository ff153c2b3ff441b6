"""
Parameter sweeps
----------------

Three one-dimensional studies straight from the library API: iteration
counts as the mesh refines, as the fracture slides more, and as advection
strengthens. The punchline is flatness: a good preconditioner barely
notices any of these knobs.
"""

from fracschur import (
    KrylovConfig,
    MaterialParams,
    PreconditionerConfig,
    ProblemSpec,
    generate,
    run_solve,
    states_from_fractions,
)

kcfg = KrylovConfig(restart=30, max_iters=120, rtol=1e-12)
variants = ("CPR", "SystemAMG")


def solve(m, fractions, peclet=1.0, variant="CPR"):
    states = states_from_fractions(m, fractions, seed=0)
    spec = ProblemSpec(refinement=m, states=states,
                       material=MaterialParams(dim=2),
                       peclet_scale=peclet, seed=0)
    p = generate(spec)
    x, report = run_solve(p.matrix, p.layout, p.spec.material,
                          PreconditionerConfig(pt_variant=variant), kcfg, p.rhs)
    return p.layout.n, report.iterations


mixed = {"stick": 1, "slide": 1, "open": 1}

# --- refinement
print("refinement sweep (mixed states):")
print(f"{'m':>6s} {'n':>6s}" + "".join(f"{v:>12s}" for v in variants))
for m in (6, 10, 14, 20):
    row = []
    for v in variants:
        n, iters = solve(m, mixed, variant=v)
        row.append(iters)
    print(f"{m:>6d} {n:>6d}" + "".join(f"{it:>12d}" for it in row))
print()

# --- sliding fraction
print("sliding-fraction sweep (m=10):")
print(f"{'slide':>6s}" + "".join(f"{v:>12s}" for v in variants))
for f in (0.0, 0.25, 0.5, 0.75, 1.0):
    if f >= 1.0:
        fr = {"slide": 1.0}
    elif f <= 0.0:
        fr = {"stick": 0.5, "open": 0.5}
    else:
        fr = {"slide": f, "stick": (1 - f) / 2, "open": (1 - f) / 2}
    row = []
    for v in variants:
        n, iters = solve(10, fr, variant=v)
        row.append(iters)
    print(f"{f:>6.2f}" + "".join(f"{it:>12d}" for it in row))
print()

# --- advection strength
print("advection sweep (m=10, mixed states):")
print(f"{'peclet':>8s}" + "".join(f"{v:>12s}" for v in variants))
for pe in (1.0, 10.0, 100.0, 1000.0, 10000.0):
    row = []
    for v in variants:
        n, iters = solve(10, mixed, peclet=pe, variant=v)
        row.append(iters)
    print(f"{pe:>8.0f}" + "".join(f"{it:>12d}" for it in row))
