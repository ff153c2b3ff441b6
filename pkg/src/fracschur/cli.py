"""Command-line front end: generate problems, solve systems, run sweeps.

Three subcommands share one flag vocabulary:

* ``gen`` writes a generated system to ``PREFIX.mtx`` (Matrix Market),
  ``PREFIX.layout.json`` (block layout sidecar) and ``PREFIX.rhs.txt``
  (one decimal float per line).
* ``solve`` runs the preconditioned outer iteration on an ingested
  matrix/layout/rhs triple or on a freshly generated problem, writes a JSON
  report and appends one CSV row.
* ``sweep`` repeats ``solve`` along one axis (refine, state_fraction,
  peclet) for one or both pressure-temperature variants and appends
  per-point rows plus iteration-growth summary rows.

Exit codes: 0 success/converged, 2 solver finished without converging,
1 usage or input errors. Nothing is written unless the inputs validated.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import time
from pathlib import Path

import numpy as np

from .errors import FracschurError
from .krylov import KrylovConfig
from .materials import MaterialParams
from .mmio import (
    read_layout,
    read_matrix_market,
    read_vector,
    write_layout,
    write_matrix_market,
    write_vector,
)
from .preconditioner import PreconditionerConfig, solve as run_solve
from .problems import ProblemSpec, generate, states_from_fractions
from .sparse import STATE_TAGS

PT_TOKENS = {"cpr": "CPR", "samg": "SystemAMG", "exact": "ExactDense"}
SWEEP_AXES = ("refine", "state_fraction", "peclet")

CSV_COLUMNS = [
    "kind", "variant", "dim", "refine", "n", "nnz", "states", "states_summary",
    "peclet_scale", "seed", "matrix", "layout", "rhs", "pt", "exact_mode",
    "flexible", "amg_theta", "thermal_stab", "restart", "max_iters", "rtol",
    "axis", "value", "iterations", "converged", "final_rres", "error",
    "growth_ratio", "wall_ms_setup", "wall_ms_solve", "wall_ms_transform",
    "wall_ms_s1", "wall_ms_chain", "wall_ms_mech", "wall_ms_pt",
]


class UsageError(Exception):
    """Bad flags or unreadable/inconsistent inputs; maps to exit code 1."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def parse_state_fractions(text: str) -> dict:
    """Parse ``stick:0.5,slide:0.5`` into a tag -> weight dict.

    Weights are relative; they are normalized downstream, so
    ``stick:1,slide:1`` is a valid even split.
    """
    fractions = {}
    for item in text.split(","):
        item = item.strip()
        if not item:
            continue
        name, sep, value = item.partition(":")
        name = name.strip().lower()
        if not sep or name not in STATE_TAGS:
            raise UsageError(
                f"bad state fraction {item!r}; expected tag:weight with tag in {STATE_TAGS}"
            )
        try:
            weight = float(value)
        except ValueError:
            raise UsageError(f"bad weight in state fraction {item!r}") from None
        if weight < 0:
            raise UsageError(f"negative weight in state fraction {item!r}")
        fractions[name] = fractions.get(name, 0.0) + weight
    if not fractions or sum(fractions.values()) <= 0:
        raise UsageError(f"state fractions {text!r} carry no positive weight")
    return fractions


def _states_summary(layout) -> str:
    counts = {tag: 0 for tag in STATE_TAGS}
    for tag in layout.states:
        counts[tag] += 1
    return ",".join(f"{tag}:{counts[tag]}" for tag in STATE_TAGS)


def _add_problem_flags(p):
    p.add_argument("--dim", type=int, choices=(2, 3), default=2,
                   help="spatial dimension of the generated problem")
    p.add_argument("--refine", type=int, default=4,
                   help="cells per side of the generated grid")
    p.add_argument("--states", default="stick:1,slide:1,open:1",
                   help="contact state mix, e.g. slide:1.0 or stick:0.5,slide:0.5")
    p.add_argument("--peclet", type=float, default=1.0,
                   help="convection/diffusion scaling knob")
    p.add_argument("--seed", type=int, default=0, help="generator seed")


def _add_solver_flags(p, pt_default="cpr"):
    p.add_argument("--pt", choices=sorted(PT_TOKENS), default=pt_default,
                   help="pressure-temperature variant")
    p.add_argument("--exact-mode", action="store_true",
                   help="dense exact Schur chain and direct stage solves")
    p.add_argument("--restart", type=int, default=30)
    p.add_argument("--max-iters", type=int, default=120)
    p.add_argument("--rtol", type=float, default=1e-12)
    p.add_argument("--amg-theta", type=float, default=0.7,
                   help="strength-of-connection threshold")
    p.add_argument("--thermal-stab", action="store_true",
                   help="add the thermal stabilization term")
    p.add_argument("--flexible", action="store_true",
                   help="flexible outer iteration with inner-accelerated stages")
    p.add_argument("--inner-rtol", type=float, default=1e-5,
                   help="inner stage tolerance used with --flexible")


def build_parser() -> _Parser:
    parser = _Parser(prog="fracschur",
                     description="Nested Schur preconditioning workbench")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", help="generate and write one problem")
    _add_problem_flags(gen)
    gen.add_argument("--out", default="problem",
                     help="output prefix for .mtx/.layout.json/.rhs.txt")

    sol = sub.add_parser("solve", help="solve one system and report")
    sol.add_argument("--matrix", help="Matrix Market input")
    sol.add_argument("--layout", help="layout sidecar JSON")
    sol.add_argument("--rhs", help="right-hand side, one float per line")
    _add_problem_flags(sol)
    _add_solver_flags(sol)
    sol.add_argument("--out", help="JSON report path")
    sol.add_argument("--csv", help="CSV file to append one row to")

    swp = sub.add_parser("sweep", help="run a one-axis experiment sweep")
    swp.add_argument("axis", choices=SWEEP_AXES)
    swp.add_argument("--values", required=True,
                     help="comma-separated grid points along the axis")
    _add_problem_flags(swp)
    _add_solver_flags(swp, pt_default=None)
    swp.add_argument("--out", help="JSON report path for the whole sweep")
    swp.add_argument("--csv", help="CSV file to append rows to")
    return parser


def _spec_from_args(args) -> ProblemSpec:
    fractions = parse_state_fractions(args.states)
    try:
        states = states_from_fractions(args.refine, fractions, seed=args.seed)
        return ProblemSpec(
            refinement=args.refine,
            states=states,
            material=MaterialParams(dim=args.dim),
            peclet_scale=args.peclet,
            seed=args.seed,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _configs_from_args(args):
    try:
        pcfg = PreconditionerConfig(
            pt_variant=PT_TOKENS[args.pt],
            exact_mode=args.exact_mode,
            amg_threshold=args.amg_theta,
            thermal_stab=args.thermal_stab,
        )
        kcfg = KrylovConfig(
            restart=args.restart,
            max_iters=args.max_iters,
            rtol=args.rtol,
            flexible=args.flexible,
            inner_rtol=args.inner_rtol,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    return pcfg, kcfg


def _base_row(args, layout, matrix, *, generated: bool) -> dict:
    row = {c: "" for c in CSV_COLUMNS}
    row.update(
        kind="solve",
        dim=layout.dim,
        n=layout.n,
        nnz=int(matrix.nnz),
        states_summary=_states_summary(layout),
        seed=args.seed,
        pt=args.pt or "",
        exact_mode=args.exact_mode,
        flexible=args.flexible,
        amg_theta=args.amg_theta,
        thermal_stab=args.thermal_stab,
        restart=args.restart,
        max_iters=args.max_iters,
        rtol=args.rtol,
    )
    if generated:
        row.update(refine=args.refine, states=args.states, peclet_scale=args.peclet)
    else:
        row.update(matrix=args.matrix, layout=args.layout, rhs=args.rhs)
    return row


def _fill_report_row(row: dict, report) -> None:
    timings = report.timings
    setup_ms = sum(v for k, v in timings.items() if k.startswith("setup_"))
    row.update(
        iterations=report.iterations,
        converged=report.converged,
        final_rres=f"{report.final_relative_residual:.6e}",
        wall_ms_setup=f"{setup_ms:.3f}",
        wall_ms_solve=f"{timings.get('solve_ms', 0.0):.3f}",
        wall_ms_transform=f"{timings.get('setup_transform_ms', 0.0):.3f}",
        wall_ms_s1=f"{timings.get('setup_form_s1_ms', 0.0):.3f}",
        wall_ms_chain=f"{timings.get('setup_build_chain_ms', timings.get('setup_exact_schur_ms', 0.0)):.3f}",
        wall_ms_mech=f"{timings.get('setup_mech_amg_ms', timings.get('setup_mech_dense_ms', 0.0)):.3f}",
        wall_ms_pt=f"{timings.get('setup_pt_setup_ms', 0.0):.3f}",
    )


def _append_csv(path, rows) -> None:
    path = Path(path)
    fresh = not path.exists() or path.stat().st_size == 0
    with path.open("a", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=CSV_COLUMNS)
        if fresh:
            writer.writeheader()
        for row in rows:
            writer.writerow(row)


def _write_report_json(path, doc) -> None:
    with Path(path).open("w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def generated_paths(prefix) -> tuple:
    """The three files ``gen`` writes for a given output prefix."""
    prefix = str(prefix)
    return (
        Path(prefix + ".mtx"),
        Path(prefix + ".layout.json"),
        Path(prefix + ".rhs.txt"),
    )


def cmd_gen(args) -> int:
    spec = _spec_from_args(args)
    problem = generate(spec)
    parent = Path(args.out).parent
    if not parent.exists():
        raise UsageError(f"output directory {parent} does not exist")
    mtx, layout_path, rhs_path = generated_paths(args.out)
    write_matrix_market(problem.matrix, mtx)
    write_layout(problem.layout, layout_path)
    write_vector(problem.rhs, rhs_path)
    print(
        f"wrote {mtx} ({problem.layout.n} rows, {problem.matrix.nnz} nnz), "
        f"{layout_path}, {rhs_path}"
    )
    return 0


def _load_ingested(args):
    for flag, value in (("--matrix", args.matrix), ("--layout", args.layout),
                        ("--rhs", args.rhs)):
        if value is None:
            raise UsageError(f"ingested solve needs {flag}")
        if not Path(value).is_file():
            raise UsageError(f"{flag} file {value!r} not found")
    matrix = read_matrix_market(args.matrix)
    layout = read_layout(args.layout)
    rhs = read_vector(args.rhs)
    if matrix.shape != (layout.n, layout.n):
        raise UsageError(
            f"matrix shape {matrix.shape} disagrees with layout size {layout.n}"
        )
    if rhs.shape[0] != layout.n:
        raise UsageError(
            f"rhs length {rhs.shape[0]} disagrees with layout size {layout.n}"
        )
    return matrix, layout, rhs


def cmd_solve(args) -> int:
    ingested = any(v is not None for v in (args.matrix, args.layout, args.rhs))
    if ingested:
        matrix, layout, rhs = _load_ingested(args)
        spec_echo = None
        material = MaterialParams(dim=layout.dim)
    else:
        spec = _spec_from_args(args)
        problem = generate(spec)
        matrix, layout, rhs = problem.matrix, problem.layout, problem.rhs
        spec_echo = spec.to_json_dict()
        material = spec.material
    pcfg, kcfg = _configs_from_args(args)
    if pcfg.exact_mode and layout.n > pcfg.dense_cap:
        raise UsageError(
            f"--exact-mode handles at most n = {pcfg.dense_cap}, problem has n = {layout.n}"
        )

    t0 = time.perf_counter()
    x, report = run_solve(matrix, layout, material, pcfg, kcfg, rhs,
                          spec_echo=spec_echo)
    wall_ms = (time.perf_counter() - t0) * 1e3

    row = _base_row(args, layout, matrix, generated=not ingested)
    row["variant"] = pcfg.pt_variant
    _fill_report_row(row, report)
    if args.csv:
        _append_csv(args.csv, [row])
    if args.out:
        doc = report.to_json_dict()
        doc.update(
            variant=pcfg.pt_variant,
            n=layout.n,
            nnz=int(matrix.nnz),
            states_summary=_states_summary(layout),
            solution=[float(v) for v in x],
            wall_ms_total=wall_ms,
        )
        _write_report_json(args.out, doc)
    status = "converged" if report.converged else "NOT converged"
    print(
        f"{pcfg.pt_variant}: {status} in {report.iterations} iterations, "
        f"relative residual {report.final_relative_residual:.3e} "
        f"(n={layout.n}, nnz={matrix.nnz})"
    )
    return 0 if report.converged else 2


def _sweep_values(args):
    items = [v.strip() for v in args.values.split(",") if v.strip()]
    if not items:
        raise UsageError("--values lists no grid points")
    out = []
    for item in items:
        try:
            value = float(item)
        except ValueError:
            raise UsageError(f"bad sweep value {item!r}") from None
        if args.axis == "refine":
            if value != int(value) or int(value) < 2:
                raise UsageError(f"refine values must be integers >= 2, got {item!r}")
            value = int(value)
        elif args.axis == "state_fraction":
            if not 0.0 <= value <= 1.0:
                raise UsageError(f"state fractions live in [0, 1], got {item!r}")
        elif value <= 0:
            raise UsageError(f"peclet values must be positive, got {item!r}")
        out.append(value)
    return out


def _sweep_spec(args, value):
    """ProblemSpec for one grid point, plus the state-mix string it used."""
    refine, states_text, peclet = args.refine, args.states, args.peclet
    if args.axis == "refine":
        refine = value
    elif args.axis == "peclet":
        peclet = value
    else:
        if value >= 1.0:
            states_text = "slide:1.0"
        elif value <= 0.0:
            states_text = "stick:0.5,open:0.5"
        else:
            rest = (1.0 - value) / 2.0
            states_text = f"slide:{value},stick:{rest},open:{rest}"
    fractions = parse_state_fractions(states_text)
    try:
        states = states_from_fractions(refine, fractions, seed=args.seed)
        spec = ProblemSpec(
            refinement=refine,
            states=states,
            material=MaterialParams(dim=args.dim),
            peclet_scale=peclet,
            seed=args.seed,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    return spec, states_text


def cmd_sweep(args) -> int:
    values = _sweep_values(args)
    variants = [args.pt] if args.pt else ["cpr", "samg"]
    rows = []
    runs = []
    iterations = {v: [] for v in variants}
    any_failure = False

    for value in values:
        spec, states_text = _sweep_spec(args, value)
        problem = generate(spec)
        for token in variants:
            sub = argparse.Namespace(**vars(args))
            sub.pt = token
            sub.states = states_text
            if args.axis == "refine":
                sub.refine = value
            elif args.axis == "peclet":
                sub.peclet = value
            pcfg, kcfg = _configs_from_args(sub)
            row = _base_row(sub, problem.layout, problem.matrix, generated=True)
            row.update(kind="sweep", variant=pcfg.pt_variant,
                       axis=args.axis, value=value)
            try:
                _, report = run_solve(
                    problem.matrix, problem.layout, spec.material,
                    pcfg, kcfg, problem.rhs, spec_echo=spec.to_json_dict(),
                )
            except (FracschurError, ValueError) as exc:
                row["error"] = str(exc)
                row["converged"] = False
                any_failure = True
                rows.append(row)
                iterations[token].append(None)
                continue
            _fill_report_row(row, report)
            rows.append(row)
            iterations[token].append(report.iterations if report.converged else None)
            if not report.converged:
                any_failure = True
            runs.append({
                "axis": args.axis, "value": value, "variant": pcfg.pt_variant,
                **report.to_json_dict(),
            })
            print(
                f"{args.axis}={value} {pcfg.pt_variant}: "
                f"{'converged' if report.converged else 'NOT converged'} "
                f"in {report.iterations} iterations"
            )

    summary = {}
    for token in variants:
        counts = [c for c in iterations[token] if c]
        variant = PT_TOKENS[token]
        row = {c: "" for c in CSV_COLUMNS}
        row.update(kind="summary", variant=variant, axis=args.axis, dim=args.dim,
                   seed=args.seed, pt=token)
        if len(counts) >= 2 and min(counts) > 0:
            if args.axis == "refine":
                growth = counts[-1] / counts[0]
            else:
                growth = max(counts) / min(counts)
            row["growth_ratio"] = f"{growth:.4f}"
            summary[variant] = {"iterations": iterations[token],
                                "growth_ratio": growth}
        else:
            summary[variant] = {"iterations": iterations[token],
                                "growth_ratio": None}
        rows.append(row)

    if args.csv:
        _append_csv(args.csv, rows)
    if args.out:
        _write_report_json(args.out, {
            "axis": args.axis,
            "values": values,
            "variants": [PT_TOKENS[t] for t in variants],
            "summary": summary,
            "runs": runs,
        })
    for variant, info in summary.items():
        ratio = info["growth_ratio"]
        text = f"{ratio:.3f}" if ratio else "n/a"
        print(f"{variant}: iteration growth ratio {text} over {args.axis} sweep")
    return 2 if any_failure else 0


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command == "gen":
            return cmd_gen(args)
        if args.command == "solve":
            return cmd_solve(args)
        return cmd_sweep(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except FracschurError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
