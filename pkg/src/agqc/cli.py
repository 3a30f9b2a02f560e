"""Command-line front door: reproducible experiments over graph/gflow files
with CSV and JSON outputs.

Exit codes: 0 success, 1 validation/verification failure, 2 malformed or
infeasible request.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path
from typing import Sequence

import numpy as np

from . import compiler, gflow as gflow_mod, graph as graph_mod, logical, sim
from .compiler import AdiabaticBudget, CompileError, Schedule
from .gflow import Gflow
from .graph import OpenGraph
from .pauli import NonCliffordAngleError


class CliError(Exception):
    def __init__(self, message: str, code: int = 2):
        super().__init__(message)
        self.code = code


def _load_graph(spec: str) -> OpenGraph:
    """Graph source: a JSON file path or a generator spec.

    Generator specs: ``chain:N[:a1,a2,...]``, ``cluster:RxC``, ``zigzag:N``,
    ``cnot``.
    """
    path = Path(spec)
    if path.exists():
        return graph_mod.graph_from_json(path.read_text())
    parts = spec.split(":")
    kind = parts[0]
    try:
        if kind == "chain":
            n = int(parts[1])
            angles = [0.0] * n
            if len(parts) > 2:
                given = [float(x) for x in parts[2].split(",")]
                if len(given) not in (n, n - 1):
                    raise CliError(f"chain:{n} takes {n} (or {n - 1}) angles")
                angles[: len(given)] = given
            return graph_mod.generate_chain(n, angles)
        if kind == "cluster":
            rows, cols = (int(x) for x in parts[1].lower().split("x"))
            return graph_mod.generate_cluster(rows, cols)
        if kind == "zigzag":
            return graph_mod.generate_zigzag(int(parts[1]))
        if kind == "cnot":
            return graph_mod.generate_cnot_graph()
    except (IndexError, ValueError) as exc:
        raise CliError(f"bad graph spec {spec!r}: {exc}") from exc
    raise CliError(f"graph source {spec!r} is neither a file nor a known generator")


def _load_gflow(spec: str, graph: OpenGraph) -> Gflow:
    """Gflow source: a JSON file path, ``find``, or ``zigzag:R``."""
    path = Path(spec)
    if path.exists():
        return gflow_mod.gflow_from_json(path.read_text())
    if spec == "find":
        gf = gflow_mod.find_gflow(graph)
        if gf is None:
            raise CliError("graph has no gflow", code=1)
        return gf
    if spec.startswith("zigzag:"):
        r = int(spec.split(":")[1])
        n = graph.n_vertices // 2
        return gflow_mod.zigzag_gflow_family(n, r)
    raise CliError(f"gflow source {spec!r} is neither a file nor find/zigzag:R")


def _write(out: str | None, text: str) -> None:
    if out is None or out == "-":
        sys.stdout.write(text if text.endswith("\n") else text + "\n")
    else:
        Path(out).write_text(text)


def _s_grid(n_points: int) -> list[float]:
    return [i / (n_points - 1) for i in range(n_points)]


def _budget(args: argparse.Namespace) -> AdiabaticBudget:
    return AdiabaticBudget(
        delta=args.delta, epsilon=args.epsilon, c_delta=args.c_delta, gamma=args.gamma
    )


def _compile(graph: OpenGraph, gf: Gflow, args: argparse.Namespace):
    mode = args.mode
    order = None
    if args.order:
        order = [int(x) - 1 for x in args.order.split(",")]
    try:
        if mode == "stepwise":
            return compiler.compile_stepwise(graph, gf, args.gamma), None
        if mode == "layered":
            return compiler.compile_layered(graph, gf, args.gamma), None
        if mode == "onestep":
            return compiler.compile_one_step(graph, gf, args.gamma), None
        if mode == "reorder-fixed":
            if order is None:
                raise CliError("reorder-fixed needs --order")
            return compiler.compile_reordered_fixed(graph, gf, order, args.gamma)
        if mode == "reorder-strip":
            if order is None:
                raise CliError("reorder-strip needs --order")
            return compiler.compile_reordered_strip(graph, gf, order, args.gamma), None
    except (CompileError, NonCliffordAngleError) as exc:
        raise CliError(str(exc)) from exc
    raise CliError(f"unknown mode {mode!r}")


def _schedule_doc(schedule: Schedule) -> dict:
    steps = []
    for st in schedule.steps:
        steps.append(
            {
                "removed": {str(v + 1): op.render() for v, op in sorted(st.removed.items())},
                "introduced": {str(v + 1): op.render() for v, op in sorted(st.introduced.items())},
                "static": [op.render() for op in st.static_terms],
                "strip": st.strip,
            }
        )
    return {"gamma": schedule.gamma, "steps": steps}


def _complex_matrix(m: np.ndarray) -> list[list[list[float]]]:
    return [[[float(z.real), float(z.imag)] for z in row] for row in m]


# ---------------------------------------------------------------------------
# subcommands


def cmd_graph_gen(args) -> int:
    g = _load_graph(args.kind)
    _write(args.out, graph_mod.graph_to_json(g))
    return 0


def cmd_graph_validate(args) -> int:
    g = _load_graph(args.graph)
    report = graph_mod.validate(g)
    doc = {"ok": report.ok, "problems": list(report.problems)}
    _write(args.out, json.dumps(doc, indent=2))
    return 0 if report.ok else 1


def cmd_gflow_find(args) -> int:
    g = _load_graph(args.graph)
    gf = gflow_mod.find_gflow(g)
    if gf is None:
        _write(args.out, json.dumps({"found": False}, indent=2))
        return 1
    _write(args.out, gflow_mod.gflow_to_json(gf))
    return 0


def cmd_gflow_verify(args) -> int:
    g = _load_graph(args.graph)
    gf = _load_gflow(args.gflow, g)
    try:
        report = gflow_mod.verify_gflow(g, gf)
    except gflow_mod.GflowStructureError as exc:
        raise CliError(str(exc)) from exc
    doc = {
        "valid": report.valid,
        "depth": report.depth,
        "max_size": report.max_size,
        "layer_sizes": list(report.layer_sizes),
        "violations": [
            {"vertex": v + 1, "axiom": ax, "detail": detail}
            for v, ax, detail in report.violations
        ],
    }
    _write(args.out, json.dumps(doc, indent=2))
    return 0 if report.valid else 1


def cmd_gflow_zigzag(args) -> int:
    gf = gflow_mod.zigzag_gflow_family(args.n, args.r)
    _write(args.out, gflow_mod.gflow_to_json(gf))
    return 0


def cmd_compile(args) -> int:
    g = _load_graph(args.graph)
    gf = _load_gflow(args.gflow, g)
    schedule, report = _compile(g, gf, args)
    doc = _schedule_doc(schedule)
    doc["hamiltonian_degree"] = compiler.hamiltonian_degree(schedule)
    if report is not None:
        doc["reorder_report"] = _reorder_doc(report)
    _write(args.out, json.dumps(doc, indent=2))
    if report is not None and not report.feasible:
        return 1
    return 0


def _reorder_doc(report) -> dict:
    return {
        "feasible": report.feasible,
        "steps": [
            {
                "vertex": fs.vertex + 1,
                "frustrated": fs.frustrated,
                "protected": fs.protected,
                "conserved_products": [
                    sorted(v + 1 for v in prod) for prod in fs.conserved_products
                ],
                "protecting_product": (
                    sorted(v + 1 for v in fs.protecting_product)
                    if fs.protecting_product
                    else None
                ),
                "detail": fs.detail,
            }
            for fs in report.steps
        ],
    }


def cmd_gapscan(args) -> int:
    g = _load_graph(args.graph)
    gf = _load_gflow(args.gflow, g)
    schedule, _ = _compile(g, gf, args)
    grid = _s_grid(args.s_grid)
    lines = []
    levels = args.levels
    header = (
        "step,s,"
        + ",".join(f"E{i}" for i in range(levels))
        + ",gap,gap_above_degenerate,degeneracy"
    )
    lines.append(header)
    step_indices = [args.step - 1] if args.step else range(len(schedule.steps))
    for k in step_indices:
        scan = sim.spectral_scan(schedule, k, grid, n_levels=levels)
        for i, s in enumerate(scan.s_grid):
            evals = ",".join(f"{e:.12g}" for e in scan.energies[i])
            lines.append(
                f"{k + 1},{s:.6g},{evals},{scan.gap[i]:.12g},"
                f"{scan.gap_above_degenerate[i]:.12g},{scan.ground_degeneracy[i]}"
            )
    _write(args.out, "\n".join(lines))
    return 0


def cmd_evolve(args) -> int:
    g = _load_graph(args.graph)
    gf = _load_gflow(args.gflow, g)
    schedule, report = _compile(g, gf, args)
    res = sim.evolve(schedule, args.tau)
    doc = {
        "mode": args.mode,
        "tau_per_step": list(res.tau_used),
        "seed": args.seed,
        "leakage": res.leakage,
        "fidelity": res.fidelity,
        "unitarity_defect": None if math.isnan(res.unitarity_defect) else res.unitarity_defect,
        "logical_unitary": (
            _complex_matrix(res.logical_unitary)
            if res.logical_unitary is not None
            else None
        ),
    }
    if report is not None:
        doc["reorder_report"] = _reorder_doc(report)
    if args.target == "chain":
        pred = logical.chain_unitary(
            [g.angles[v] for v in sorted(g.angles)]
        )
        doc["distance_to_chain_prediction"] = logical.compare(res.logical_unitary, pred)
    _write(args.out, json.dumps(doc, indent=2))
    return 0


def cmd_reorder(args) -> int:
    g = _load_graph(args.graph)
    gf = _load_gflow(args.gflow, g)
    order = [int(x) - 1 for x in args.order.split(",")]
    doc: dict = {"order": [v + 1 for v in order], "mode": args.mode, "seed": args.seed}
    try:
        if args.mode == "fixed":
            schedule, report = compiler.compile_reordered_fixed(g, gf, order, args.gamma)
            doc["report"] = _reorder_doc(report)
        elif args.mode == "strip":
            schedule = compiler.compile_reordered_strip(g, gf, order, args.gamma)
            doc["report"] = None
        else:
            raise CliError(f"unknown reorder mode {args.mode!r}")
    except (CompileError, NonCliffordAngleError) as exc:
        raise CliError(str(exc)) from exc
    if args.tau:
        taus = [float(t) for t in args.tau.split(",")]
        rows = sim.leakage_experiment(schedule, taus)
        doc["leakage"] = [
            {"tau": t, "leakage": l, "fidelity": f} for t, l, f in rows
        ]
        if args.leakage_csv:
            lines = ["tau,leakage,fidelity"]
            lines += [f"{t:.12g},{l:.12g},{f:.12g}" for t, l, f in rows]
            Path(args.leakage_csv).write_text("\n".join(lines) + "\n")
    _write(args.out, json.dumps(doc, indent=2))
    if args.mode == "fixed" and not doc["report"]["feasible"]:
        return 1
    return 0


def cmd_mbqc(args) -> int:
    g = _load_graph(args.graph)
    gf = _load_gflow(args.gflow, g)
    k = len(g.inputs)
    if args.input:
        amps = [complex(x) for x in args.input.split(",")]
        if len(amps) != 1 << k:
            raise CliError(f"input state needs {1 << k} amplitudes")
        state = np.array(amps, dtype=complex)
        state = state / np.linalg.norm(state)
    else:
        state = np.zeros(1 << k, dtype=complex)
        state[0] = 1.0
    try:
        run = sim.mbqc_reference_run(g, gf, state, args.outcomes, seed=args.seed)
    except ValueError as exc:
        raise CliError(str(exc)) from exc
    doc = {
        "outcomes": list(run.outcomes),
        "seed": args.seed,
        "output_state": [[float(z.real), float(z.imag)] for z in run.output_state],
    }
    _write(args.out, json.dumps(doc, indent=2))
    return 0


def cmd_bounds(args) -> int:
    g = _load_graph(args.graph)
    gf = _load_gflow(args.gflow, g)
    schedule, _ = _compile(g, gf, args)
    budget = _budget(args)
    lines = ["step,u_size,gap_min,hdot_norm,tau_bound"]
    for k, step in enumerate(schedule.steps):
        if step.is_commuting_replacement():
            gap_min = compiler.step_gap_analytic(step, args.gamma, 0.5)
            hdot = compiler.step_norm_hdot(step, args.gamma)
            tau = compiler.runtime_bound(step, budget)
        else:
            grid = _s_grid(args.s_grid)
            scan = sim.spectral_scan(schedule, k, grid)
            gap_min = float(min(scan.gap))
            a, b = sim.step_endpoint_matrices(schedule, k)
            hdot = float(np.linalg.norm(b, 2))
            tau = compiler.runtime_bound(step, budget, gap=gap_min, hdot_norm=hdot)
        lines.append(f"{k + 1},{step.u_size},{gap_min:.12g},{hdot:.12g},{tau:.12g}")
    _write(args.out, "\n".join(lines))
    return 0


def cmd_gadget(args) -> int:
    try:
        gp = compiler.gadget_parameters(args.k, args.lam)
    except ValueError as exc:
        raise CliError(str(exc)) from exc
    doc = {
        "k": args.k,
        "lambda": args.lam,
        "coefficient": gp.coefficient,
        "lambda_max": gp.lambda_max,
        "converges": gp.converges,
    }
    _write(args.out, json.dumps(doc, indent=2))
    return 0


# ---------------------------------------------------------------------------


def _add_common(p: argparse.ArgumentParser, gflow_required: bool = True) -> None:
    p.add_argument("--graph", required=True, help="graph file or generator spec")
    p.add_argument(
        "--gflow",
        required=gflow_required,
        default="find",
        help="gflow file, 'find', or 'zigzag:R' (default: find)",
    )
    p.add_argument("--mode", default="stepwise",
                   choices=["stepwise", "layered", "onestep", "reorder-fixed", "reorder-strip"])
    p.add_argument("--order", default=None, help="1-based vertex order, e.g. 3,1,2")
    p.add_argument("--gamma", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None, help="output path (default: stdout)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="agqc", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    g = sub.add_parser("graph", help="graph generation and validation")
    gsub = g.add_subparsers(dest="subcommand", required=True)
    gg = gsub.add_parser("gen")
    gg.add_argument("kind", help="chain:N[:angles] | cluster:RxC | zigzag:N | cnot")
    gg.add_argument("--out", default=None)
    gg.set_defaults(func=cmd_graph_gen)
    gv = gsub.add_parser("validate")
    gv.add_argument("--graph", required=True)
    gv.add_argument("--out", default=None)
    gv.set_defaults(func=cmd_graph_validate)

    f = sub.add_parser("gflow", help="gflow search, verification, zig-zag family")
    fsub = f.add_subparsers(dest="subcommand", required=True)
    ff = fsub.add_parser("find")
    ff.add_argument("--graph", required=True)
    ff.add_argument("--out", default=None)
    ff.set_defaults(func=cmd_gflow_find)
    fv = fsub.add_parser("verify")
    fv.add_argument("--graph", required=True)
    fv.add_argument("--gflow", required=True)
    fv.add_argument("--out", default=None)
    fv.set_defaults(func=cmd_gflow_verify)
    fz = fsub.add_parser("zigzag")
    fz.add_argument("--n", type=int, required=True)
    fz.add_argument("--r", type=int, required=True)
    fz.add_argument("--out", default=None)
    fz.set_defaults(func=cmd_gflow_zigzag)

    c = sub.add_parser("compile", help="build a schedule and print it")
    _add_common(c, gflow_required=False)
    c.set_defaults(func=cmd_compile)

    gs = sub.add_parser("gapscan", help="exact spectra across the interpolation")
    _add_common(gs, gflow_required=False)
    gs.add_argument("--step", type=int, default=0, help="1-based step (default: all)")
    gs.add_argument("--s-grid", type=int, default=101, dest="s_grid")
    gs.add_argument("--levels", type=int, default=6)
    gs.set_defaults(func=cmd_gapscan)

    ev = sub.add_parser("evolve", help="integrate a schedule, extract the logical unitary")
    _add_common(ev, gflow_required=False)
    ev.add_argument("--tau", type=float, default=200.0)
    ev.add_argument("--target", choices=["none", "chain"], default="none")
    ev.set_defaults(func=cmd_evolve)

    ro = sub.add_parser("reorder", help="reordered schedules: feasibility and leakage")
    ro.add_argument("--graph", required=True)
    ro.add_argument("--gflow", default="find")
    ro.add_argument("--order", required=True)
    ro.add_argument("--mode", choices=["fixed", "strip"], default="fixed")
    ro.add_argument("--tau", default=None, help="comma-separated taus for a leakage table")
    ro.add_argument("--leakage-csv", default=None, dest="leakage_csv",
                    help="also write the leakage table as CSV (tau,leakage,fidelity)")
    ro.add_argument("--gamma", type=float, default=1.0)
    ro.add_argument("--seed", type=int, default=0)
    ro.add_argument("--out", default=None)
    ro.set_defaults(func=cmd_reorder)

    mb = sub.add_parser("mbqc", help="measurement-pattern reference simulation")
    mb.add_argument("--graph", required=True)
    mb.add_argument("--gflow", default="find")
    mb.add_argument("--input", default=None, help="comma-separated complex amplitudes")
    mb.add_argument("--outcomes", default="zeros", help="zeros | random")
    mb.add_argument("--seed", type=int, default=0)
    mb.add_argument("--out", default=None)
    mb.set_defaults(func=cmd_mbqc)

    bo = sub.add_parser("bounds", help="per-step runtime bounds as CSV")
    _add_common(bo, gflow_required=False)
    bo.add_argument("--delta", type=float, default=1.0)
    bo.add_argument("--epsilon", type=float, default=0.01)
    bo.add_argument("--c-delta", type=float, default=1.0, dest="c_delta")
    bo.add_argument("--s-grid", type=int, default=101, dest="s_grid")
    bo.set_defaults(func=cmd_bounds)

    ga = sub.add_parser("gadget", help="perturbation-gadget coefficient and threshold")
    ga.add_argument("--k", type=int, required=True)
    ga.add_argument("--lam", type=float, required=True)
    ga.add_argument("--out", default=None)
    ga.set_defaults(func=cmd_gadget)
    return ap


def main(argv: Sequence[str] | None = None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except (graph_mod.GraphFormatError, gflow_mod.GflowFormatError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
