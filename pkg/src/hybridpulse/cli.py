"""Command-line scenario runner: parse, execute, write CSV artifacts.

Every artifact carries a comment header that embeds the complete
scenario (defaults resolved), so the file alone suffices to re-run it;
identical scenarios produce byte-identical files.
"""

from __future__ import annotations

import argparse
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from .compiler import GateSpec, SequenceOrder, target_rotation
from .dynamics import DensityState, DephasingSpec, run_schedule
from .fidelity import METRIC_NOTE, default_t1_grid, gate_fidelity, hybrid_sweep
from .model import HybridParams
from .pulses import CalibrationFailed, schedule_rotation
from .scenario import (
    ParseError,
    Scenario,
    ValidationError,
    parse_scenario,
    scenario_header_lines,
)
from .singlet_triplet import MATERIALS, comparison_sweep
from .twoqubit import TwoQubitParams, conditional_phase_schedule, truth_table


def _params(s: Scenario) -> HybridParams:
    if s.t2 is None:
        return HybridParams.with_valley_ratio(s.e01, s.t1, Gamma=s.gamma_charge,
                                              gamma=s.gamma_spin)
    return HybridParams(E01=s.e01, t1=s.t1, t2=s.t2, Gamma=s.gamma_charge,
                        gamma=s.gamma_spin)


def _write(path: Path, text: str) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    return path


def _map_fn(threads: int):
    if threads <= 1:
        return map
    pool = ThreadPoolExecutor(max_workers=threads)
    return lambda fn, items: pool.map(fn, items)


def run_single_gate(s: Scenario, out: Path):
    p = _params(s)
    spec = GateSpec(beta=s.beta, eta=s.eta, zeta=s.zeta)
    order = SequenceOrder(s.order)
    compiled = schedule_rotation(p, spec, order, tol=s.calibration_tol, strict=False)
    deph = DephasingSpec(Gamma=s.gamma_charge, gamma=s.gamma_spin)
    report = gate_fidelity(p, compiled.schedule, target_rotation(spec), deph)
    traj = run_schedule(DensityState.basis(0), p, compiled.schedule, deph,
                        samples_per_segment=s.samples_per_segment, dt_max=s.dt_max)
    label = s.resolved_label()
    header = scenario_header_lines(s) + [
        f"metric = {METRIC_NOTE}",
        f"fidelity = {report.fidelity:.17g}",
        f"infidelity = {report.infidelity:.17g}",
        f"leakage = {report.leakage:.17g}",
        f"block_distance = {compiled.block_distance:.17g}",
        f"merged_anticrossings = {int(compiled.merged)}",
    ]
    paths = [
        _write(out / f"{label}_trajectory.csv", traj.to_csv_text(header)),
        _write(out / f"{label}_schedule.txt", compiled.schedule.to_text()),
    ]
    return paths


def run_hybrid_sweep(s: Scenario, out: Path, threads=1):
    deph = DephasingSpec(Gamma=s.gamma_charge, gamma=s.gamma_spin)
    grid = default_t1_grid(s.points, s.t1_min, s.t1_max)
    spec = GateSpec(beta=s.beta, eta=s.eta, zeta=s.zeta)
    res = hybrid_sweep(s.e01, deph, grid, order=SequenceOrder(s.order), spec=spec,
                       map_fn=_map_fn(threads))
    text = res.to_csv_text(scenario_header_lines(s))
    return [_write(out / f"{s.resolved_label()}_sweep.csv", text)]


def run_st_comparison(s: Scenario, out: Path, threads=1):
    import io

    grid = list(np.geomspace(s.t_min, s.t_max, s.st_points))
    sweeps = comparison_sweep(s.materials, grid, map_fn=_map_fn(threads))
    buf = io.StringIO()
    for line in scenario_header_lines(s):
        buf.write(f"# {line}\n")
    buf.write(f"# metric = {METRIC_NOTE}\n")
    buf.write("material,t_ueV,infidelity,eps_opt_ueV\n")
    for name in s.materials:
        label = MATERIALS[name].label
        for row in sweeps[label].rows:
            buf.write(f"{label},{row.t:.17g},{row.infidelity:.17g},{row.eps_opt:.17g}\n")
    return [_write(out / f"{s.resolved_label()}_st.csv", buf.getvalue())]


def run_two_qubit(s: Scenario, out: Path):
    p = _params(s)
    p2 = TwoQubitParams(control=p, target=p, delta_eps=s.delta_eps)
    sched = conditional_phase_schedule(p2, s.phi, tol=s.calibration_tol, strict=False)
    deph = DephasingSpec(Gamma=s.gamma_charge, gamma=s.gamma_spin)
    tt = truth_table(p2, sched, deph if (deph.Gamma or deph.gamma) else None)
    header = scenario_header_lines(s) + [
        f"pulse_count = {sched.pulse_count}",
        f"total_duration_ns = {sched.total_duration:.17g}",
    ]
    return [_write(out / f"{s.resolved_label()}_truth_table.csv", tt.to_csv_text(header))]


def run_figure2_bundle(s: Scenario, out: Path, threads=1):
    """The full comparison-figure inventory: one CSV per hybrid splitting
    plus one per singlet-triplet material family (GaAs; natural and
    purified silicon share the Si file)."""
    label = s.resolved_label()
    deph = DephasingSpec(Gamma=s.gamma_charge, gamma=s.gamma_spin)
    grid = default_t1_grid(s.points, s.t1_min, s.t1_max)
    paths = []
    for e01 in s.e01_values:
        res = hybrid_sweep(e01, deph, grid, order=SequenceOrder(s.order),
                           map_fn=_map_fn(threads))
        text = res.to_csv_text(scenario_header_lines(s))
        name = f"{label}_hybrid_e01_{e01:g}.csv"
        paths.append(_write(out / name, text))

    st_grid = list(np.geomspace(s.t_min, s.t_max, s.st_points))
    sweeps = comparison_sweep(s.materials, st_grid, map_fn=_map_fn(threads))
    families = {"gaas": [], "silicon": []}
    for name in s.materials:
        families["gaas" if name == "gaas" else "silicon"].append(name)
    import io

    for family, names in families.items():
        if not names:
            continue
        buf = io.StringIO()
        for line in scenario_header_lines(s):
            buf.write(f"# {line}\n")
        buf.write(f"# metric = {METRIC_NOTE}\n")
        buf.write("material,t_ueV,infidelity,eps_opt_ueV\n")
        for name in names:
            mat_label = MATERIALS[name].label
            for row in sweeps[mat_label].rows:
                buf.write(f"{mat_label},{row.t:.17g},{row.infidelity:.17g},{row.eps_opt:.17g}\n")
        paths.append(_write(out / f"{label}_st_{family}.csv", buf.getvalue()))
    return paths


def run_scenario(s: Scenario, out_dir, threads: int = 1):
    """Dispatch one validated scenario; returns the list of written paths."""
    out = Path(out_dir)
    if s.kind == "single-gate":
        return run_single_gate(s, out)
    if s.kind == "hybrid-sweep":
        return run_hybrid_sweep(s, out, threads)
    if s.kind == "st-comparison":
        return run_st_comparison(s, out, threads)
    if s.kind == "two-qubit":
        return run_two_qubit(s, out)
    if s.kind == "figure2-bundle":
        return run_figure2_bundle(s, out, threads)
    raise ValidationError(f"unhandled scenario kind {s.kind!r}")


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="hybridpulse",
        description="Pulse-gated three-level qubit simulator: scenario runner.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="execute a scenario file")
    run.add_argument("scenario", help="path to the scenario file")
    run.add_argument("--out", default=".", help="output directory for artifacts")
    run.add_argument("--threads", type=int, default=1, help="sweep-point parallelism")
    run.add_argument("--check", action="store_true",
                     help="parse and validate only; write nothing")
    args = parser.parse_args(argv)

    try:
        text = Path(args.scenario).read_text(encoding="utf-8")
    except OSError as exc:
        print(f"error: io: {exc}", file=sys.stderr)
        return 2
    try:
        scenario = parse_scenario(text)
    except ParseError as exc:
        for message in exc.errors:
            print(f"error: parse: {message}", file=sys.stderr)
        return 2
    except ValidationError as exc:
        print(f"error: validation: {exc}", file=sys.stderr)
        return 2

    if args.check:
        print(f"ok: {scenario.kind} scenario {scenario.resolved_label()!r}")
        return 0

    try:
        paths = run_scenario(scenario, args.out, threads=args.threads)
    except CalibrationFailed as exc:
        print(f"error: calibration: {exc}", file=sys.stderr)
        return 3
    except (ValueError, RuntimeError) as exc:
        print(f"error: runtime: {exc}", file=sys.stderr)
        return 3
    for path in paths:
        print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
