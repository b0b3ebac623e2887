"""Command-line front end: scenario files in, CSV results and reports out.

Scenario files are JSON with matrices as nested arrays of decimals; node
and channel indices are 1-based at this boundary.  Exit codes: 0 success,
1 parse error, 2 failed assumption, 3 synthesis failure.

Result CSV schema: ``t,node,err_last,err_avg,bound`` with node 0 carrying
the true-state norm for that sample.
"""

from __future__ import annotations

import argparse
import json
import sys
import time

import numpy as np

from .errors import (DuioError, NotStabilizable, ScenarioFormatError,
                     ValidationFailed)
from .graph import Topology
from .scenario import (InputChannel, InputModel, RunRecord, Scenario,
                       SimParams, SystemModel, build_designs,
                       compare_modes, reference_scenario, run_scenario,
                       steady_state_errors, validate_scenario)

EXIT_OK = 0
EXIT_PARSE = 1
EXIT_ASSUMPTION = 2
EXIT_SYNTHESIS = 3


# --------------------------------------------------------------------------
# scenario file <-> Scenario
# --------------------------------------------------------------------------

def _matrix(obj, name, rows=None, cols=None):
    try:
        M = np.array(obj, dtype=float)
    except (TypeError, ValueError):
        raise ScenarioFormatError(f"{name} must be a nested array of numbers")
    if M.size == 0:
        M = M.reshape(0, cols if cols is not None else 0)
    if M.ndim != 2:
        raise ScenarioFormatError(f"{name} must be a rectangular matrix")
    if rows is not None and M.shape[0] != rows:
        raise ScenarioFormatError(f"{name} must have {rows} rows, got {M.shape[0]}")
    if cols is not None and M.shape[1] != cols:
        raise ScenarioFormatError(f"{name} must have {cols} columns, got {M.shape[1]}")
    if M.size and not np.isfinite(M).all():
        raise ScenarioFormatError(f"{name} contains non-finite entries")
    return M


def scenario_from_dict(d: dict) -> Scenario:
    """Build a Scenario from the parsed JSON document."""
    if not isinstance(d, dict):
        raise ScenarioFormatError("scenario document must be a JSON object")
    for key in ("system", "nodes", "graph", "inputs"):
        if key not in d:
            raise ScenarioFormatError(f"missing required section {key!r}")

    sysd = d["system"]
    A = _matrix(sysd.get("A"), "system.A")
    n = A.shape[0]
    if A.shape != (n, n):
        raise ScenarioFormatError("system.A must be square")
    B = _matrix(sysd.get("B"), "system.B", rows=n)
    C = _matrix(sysd.get("C"), "system.C", cols=n)

    nodes = d["nodes"]
    if not isinstance(nodes, list) or not nodes:
        raise ScenarioFormatError("nodes must be a non-empty list")
    c_blocks = []
    known_cols = []
    overrides = []
    next_row = 0
    for idx, nd in enumerate(nodes, start=1):
        if not isinstance(nd, dict):
            raise ScenarioFormatError(f"node {idx} must be an object")
        if "C" in nd:
            Ci = _matrix(nd["C"], f"node {idx} C", cols=n)
            rows = range(next_row, next_row + Ci.shape[0])
            if next_row + Ci.shape[0] > C.shape[0] or \
                    not np.array_equal(C[list(rows)], Ci):
                raise ScenarioFormatError(
                    f"node {idx}: explicit C does not match the next rows of system.C")
        elif "C_rows" in nd:
            rows = [int(r) - 1 for r in nd["C_rows"]]
            if rows != list(range(next_row, next_row + len(rows))):
                raise ScenarioFormatError(
                    f"node {idx}: C_rows must continue the partition of system.C "
                    f"(expected rows starting at {next_row + 1})")
            if rows and rows[-1] >= C.shape[0]:
                raise ScenarioFormatError(f"node {idx}: C_rows out of range")
            Ci = C[rows]
        else:
            raise ScenarioFormatError(f"node {idx}: needs C_rows or an explicit C")
        next_row += Ci.shape[0]
        c_blocks.append(Ci)

        kc = nd.get("known_input_cols", [])
        cols = []
        for k in kc:
            k = int(k) - 1
            if not 0 <= k < B.shape[1]:
                raise ScenarioFormatError(f"node {idx}: input column {k + 1} out of range")
            cols.append(k)
        known_cols.append(tuple(cols))

        if ("P" in nd) != ("L" in nd):
            raise ScenarioFormatError(f"node {idx}: P and L must be supplied together")
        if "P" in nd:
            P = _matrix(nd["P"], f"node {idx} P", cols=n)
            L = _matrix(nd["L"], f"node {idx} L", rows=n, cols=Ci.shape[0])
            overrides.append((P, L))
        else:
            overrides.append(None)
    if next_row != C.shape[0]:
        raise ScenarioFormatError("node output blocks do not cover all rows of system.C")

    gd = d["graph"]
    edges = []
    for e in gd.get("edges", []):
        if len(e) != 2:
            raise ScenarioFormatError(f"edge {e} must be a pair")
        i, j = int(e[0]) - 1, int(e[1]) - 1
        if not (0 <= i < len(nodes) and 0 <= j < len(nodes)):
            raise ScenarioFormatError(f"edge {e} out of range")
        if i == j:
            raise ScenarioFormatError(f"edge {e} is a self-loop")
        edges.append((i, j))
    graph = Topology(len(nodes), tuple(edges))

    channels = []
    for idx, ch in enumerate(d["inputs"], start=1):
        shape = ch.get("shape")
        try:
            channels.append(InputChannel(
                shape=shape, amplitude=float(ch.get("amplitude", 1.0)),
                omega=float(ch.get("omega", 0.0))))
        except (TypeError, ValueError) as exc:
            raise ScenarioFormatError(f"input channel {idx}: {exc}")
    if len(channels) != B.shape[1]:
        raise ScenarioFormatError(
            f"{len(channels)} input channels for {B.shape[1]} input columns")

    sd = d.get("sim", {})
    x0 = sd.get("x0")
    if x0 is not None:
        x0 = np.asarray(x0, dtype=float)
        if x0.shape != (n,):
            raise ScenarioFormatError(f"sim.x0 must have length {n}")
    try:
        sim = SimParams(
            steps=int(sd.get("steps", 300)),
            nu=int(sd.get("nu", 50)),
            gamma=float(sd.get("gamma", 0.5)),
            normalize=bool(sd.get("normalize", False)),
            x0=x0,
            target_radius=float(sd.get("target_radius", 0.5)),
            warm_start=bool(sd.get("warm_start", False)),
            detect_margin=float(sd.get("detect_margin", 1e-3)))
    except ValueError as exc:
        raise ScenarioFormatError(f"sim block: {exc}")

    try:
        return Scenario(system=SystemModel(A=A, B=B, C=C,
                                           c_blocks=tuple(c_blocks),
                                           known_cols=tuple(known_cols)),
                        graph=graph, inputs=InputModel(tuple(channels)),
                        sim=sim, overrides=tuple(overrides))
    except (DuioError, ValueError) as exc:
        raise ScenarioFormatError(str(exc))


def scenario_to_dict(scenario: Scenario, designs: list | None = None) -> dict:
    """Serialize back to the file schema (1-based indices, exact decimals)."""
    sysm = scenario.system
    nodes = []
    row = 0
    for i in range(sysm.node_count):
        p_i = sysm.C_i(i).shape[0]
        nd = {
            "C_rows": [r + 1 for r in range(row, row + p_i)],
            "known_input_cols": [k + 1 for k in sysm.known_cols[i]],
        }
        row += p_i
        if designs is not None:
            nd["P"] = designs[i].P.tolist()
            nd["L"] = designs[i].L.tolist()
            nd["A_bar"] = designs[i].A_bar.tolist()   # informational
        elif scenario.overrides[i] is not None:
            P, L = scenario.overrides[i]
            nd["P"] = np.asarray(P).tolist()
            nd["L"] = np.asarray(L).tolist()
        nodes.append(nd)
    sim = scenario.sim
    return {
        "system": {"A": sysm.A.tolist(), "B": sysm.B.tolist(), "C": sysm.C.tolist()},
        "nodes": nodes,
        "graph": {"edges": [[i + 1, j + 1] for i, j in scenario.graph.edges]},
        "inputs": [{"shape": ch.shape, "amplitude": ch.amplitude, "omega": ch.omega}
                   for ch in scenario.inputs.channels],
        "sim": {
            "steps": sim.steps, "nu": sim.nu, "gamma": sim.gamma,
            "normalize": sim.normalize,
            "x0": scenario.x0().tolist(),
            "target_radius": sim.target_radius,
            "warm_start": sim.warm_start,
            "detect_margin": sim.detect_margin,
        },
    }


def load_scenario(path: str) -> Scenario:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ScenarioFormatError(f"cannot read {path}: {exc}")
    except json.JSONDecodeError as exc:
        raise ScenarioFormatError(f"{path} is not valid JSON: {exc}")
    return scenario_from_dict(doc)


# --------------------------------------------------------------------------
# CSV emission
# --------------------------------------------------------------------------

CSV_HEADER = "t,node,err_last,err_avg,bound"


def _fmt(v) -> str:
    return repr(float(v))


def record_to_csv(record: RunRecord) -> str:
    """Flat per-sample rows; node 0 carries the true-state norm."""
    lines = [CSV_HEADER]
    x_norm = np.linalg.norm(record.x_true, axis=1)
    for k, t in enumerate(record.t):
        b = _fmt(record.bound[k]) if record.bound is not None else ""
        lines.append(f"{t},0,{_fmt(x_norm[k])},{_fmt(x_norm[k])},{b}")
        for i in range(record.node_count):
            lines.append(
                f"{t},{i + 1},{_fmt(record.err_last[k, i])},"
                f"{_fmt(record.err_avg[k, i])},{b}")
    return "\n".join(lines) + "\n"


# --------------------------------------------------------------------------
# subcommands
# --------------------------------------------------------------------------

def cmd_validate(args) -> int:
    scenario = load_scenario(args.scenario)
    designs = build_designs(scenario)
    report = validate_scenario(scenario, designs)
    print(f"communication graph connectivity: "
          f"{'pass' if report.connected else 'FAIL'}")
    print(f"joint reconstructability:         "
          f"{'pass' if report.joint_ok else 'FAIL'}")
    if not report.joint_ok:
        print("  blind subspace basis vectors:")
        for v in report.blind_kernel.T:
            print("   ", np.array2string(v, precision=6))
    print(f"mu      = {report.mu:.6g}")
    print(f"lambda2 = {report.lambda2:.6g}")
    for i in range(len(report.K)):
        print(f"node {i + 1}: K = {report.K[i]:.6g}  alpha = {report.alpha[i]:.6g}  "
              f"quotient radius = {report.quotient_radii[i]:.6g}")
    for msg in report.design_failures:
        print(f"design invariant FAIL: {msg}")
    if not report.passed:
        return EXIT_ASSUMPTION
    print("all checks passed")
    return EXIT_OK


def cmd_design(args) -> int:
    scenario = load_scenario(args.scenario)
    designs = build_designs(scenario)
    doc = scenario_to_dict(scenario, designs)
    text = json.dumps(doc, indent=2)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
        print(f"designs written to {args.out}")
    else:
        print(text)
    return EXIT_OK


def _apply_run_overrides(scenario: Scenario, args) -> Scenario:
    from dataclasses import replace
    sim = scenario.sim
    kwargs = {}
    if args.nu is not None:
        kwargs["nu"] = args.nu
    if args.gamma is not None:
        kwargs["gamma"] = args.gamma
    if args.steps is not None:
        kwargs["steps"] = args.steps
    if args.normalize is not None:
        kwargs["normalize"] = args.normalize
    if getattr(args, "warm_start", None) is not None:
        kwargs["warm_start"] = args.warm_start
    if kwargs:
        sim = replace(sim, **kwargs)
        scenario = replace(scenario, sim=sim)
    return scenario


def cmd_run(args) -> int:
    scenario = _apply_run_overrides(load_scenario(args.scenario), args)
    t0 = time.perf_counter()
    record = run_scenario(scenario, record_bound=args.bound)
    wall = time.perf_counter() - t0
    csv_text = record_to_csv(record)
    with open(args.out, "w", encoding="utf-8", newline="") as fh:
        fh.write(csv_text)
    ss = steady_state_errors(record)
    print(f"run: steps={scenario.sim.steps} nu={scenario.sim.nu} "
          f"gamma={scenario.sim.gamma} normalize={scenario.sim.normalize}")
    print(f"mu = {record.mu:.6g}  lambda2 = {record.lambda2:.6g}")
    for i, v in enumerate(ss):
        print(f"node {i + 1}: steady-state error = {v:.6g}")
    print(f"results written to {args.out} ({record.steps * (record.node_count + 1)} rows)")
    print(f"wall time: {wall:.3f} s")
    return EXIT_OK


def cmd_compare(args) -> int:
    scenario = load_scenario(args.scenario)
    nu_list = [int(v) for v in args.nu_list.split(",") if v.strip()]
    modes = [m.strip() for m in args.modes.split(",") if m.strip()]
    summaries = compare_modes(scenario, nu_list, modes)
    lines = ["mode,nu,node,steady_state"]
    for s in summaries:
        for i, v in enumerate(s.steady_state):
            lines.append(f"{s.mode},{s.nu},{i + 1},{_fmt(v)}")
    text = "\n".join(lines) + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        print(f"comparison written to {args.out}")
    else:
        print(text, end="")
    if summaries:
        print(f"mu = {summaries[0].mu:.6g}  lambda2 = {summaries[0].lambda2:.6g}")
    for s in summaries:
        print(f"{s.mode:>10s} nu={s.nu:<6d} max steady-state = "
              f"{s.max_steady_state:.6g}  ({s.wall_time:.2f} s)")
    return EXIT_OK


def cmd_example(args) -> int:
    doc = scenario_to_dict(reference_scenario())
    text = json.dumps(doc, indent=2)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
        print(f"reference scenario written to {args.out}")
    else:
        print(text)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="duio",
        description="Distributed unknown-input observer: validate, design, "
                    "simulate and compare over scenario files.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check scenario assumptions and designs")
    p.add_argument("scenario")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("design", help="synthesize and emit per-node P, L")
    p.add_argument("scenario")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_design)

    p = sub.add_parser("run", help="simulate and write the results CSV")
    p.add_argument("scenario")
    p.add_argument("--nu", type=int, default=None)
    p.add_argument("--gamma", type=float, default=None)
    p.add_argument("--steps", type=int, default=None)
    p.add_argument("--normalize", action=argparse.BooleanOptionalAction,
                   default=None)
    p.add_argument("--warm-start", dest="warm_start",
                   action=argparse.BooleanOptionalAction, default=None)
    p.add_argument("--bound", action=argparse.BooleanOptionalAction, default=True,
                   help="record the averaged-error bound column (default on)")
    p.add_argument("--out", default="results.csv")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("compare", help="steady-state table over nu and modes")
    p.add_argument("scenario")
    p.add_argument("--nu-list", default="50,60")
    p.add_argument("--modes", default="plain,normalized")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("example", help="emit the built-in reference scenario")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_example)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ScenarioFormatError as exc:
        print(f"scenario error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except ValidationFailed as exc:
        for msg in exc.failures:
            print(f"assumption failed: {msg}", file=sys.stderr)
        return EXIT_ASSUMPTION
    except NotStabilizable as exc:
        print(f"synthesis failed: {exc}", file=sys.stderr)
        return EXIT_SYNTHESIS
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_PARSE


if __name__ == "__main__":
    sys.exit(main())
