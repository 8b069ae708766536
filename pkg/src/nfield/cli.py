"""Command-line entry point: solve, sweep, oracle, validate.

Artifacts per run directory:
  trajectory.csv   solve/oracle runs: ``t,x1..xm,population,u`` rows,
                   time outer, grid point inner, population innermost
  dependence.csv   sweep runs: ``lambda,d,outcome`` rows
  summary          key-value text: outcome, per-window diagnostics,
                   full config echo, seed, wall time

Exit status: 0 horizon reached / oracle passed, 2 maximally extended
(scriptable blow-up), 3 stalled, 1 any error.
"""
from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

import numpy as np

from . import backend, lab, scenarios
from .config import (ConfigError, RunConfig, apply_overrides, build_model,
                     build_solver_config, parse_config)
from .grids import make_time_grid
from .model import validate_assumptions
from .solver import OutcomeKind, SolutionOutcome, extend_solution

_EXIT_BY_KIND = {
    OutcomeKind.GLOBAL: 0,
    OutcomeKind.MAXIMALLY_EXTENDED: 2,
    OutcomeKind.STALLED: 3,
}


def _fmt(value, precision: int) -> str:
    if isinstance(value, float):
        return f"{value:.{precision}g}"
    return str(value)


def write_trajectory_csv(path: Path, traj, grid, precision: int) -> None:
    times, values = traj
    npop = values.shape[2]
    ndim = grid.points.shape[1]
    header = "t," + ",".join(f"x{d + 1}" for d in range(ndim)) + ",population,u"
    rows = [header]
    for ti, t in enumerate(times):
        ts = _fmt(float(t), precision)
        for pi in range(grid.npoints):
            coords = ",".join(_fmt(float(c), precision) for c in grid.points[pi])
            for j in range(npop):
                rows.append(f"{ts},{coords},{j},{_fmt(float(values[ti, pi, j]), precision)}")
    path.write_text("\n".join(rows) + "\n", encoding="utf-8")


def write_dependence_csv(path: Path, report, precision: int) -> None:
    rows = ["lambda,d,outcome"]
    for e in report.entries:
        rows.append(f"{_fmt(e.lam, precision)},{_fmt(e.distance, precision)},{e.outcome.value}")
    path.write_text("\n".join(rows) + "\n", encoding="utf-8")


def summary_lines(cfg: RunConfig, outcome: SolutionOutcome | None,
                  extra: list[str], seed: int, wall: float,
                  precision: int) -> list[str]:
    lines = [f"backend = {backend.active_backend()}", f"seed = {seed}"]
    if outcome is not None:
        lines.append(f"outcome.kind = {outcome.kind.value}")
        lines.append(f"outcome.t_end = {_fmt(outcome.t_end, precision)}")
        if outcome.zeta_hat is not None:
            lines.append(f"outcome.zeta_hat = {_fmt(outcome.zeta_hat, precision)}")
        if outcome.final_norm is not None:
            lines.append(f"outcome.final_norm = {_fmt(outcome.final_norm, precision)}")
        if outcome.reason:
            lines.append(f"outcome.reason = {outcome.reason}")
        for i, d in enumerate(outcome.diagnostics):
            tag = f"window.{i:04d}"
            lines.append(
                f"{tag} = start {_fmt(d.window.start, precision)}"
                f" delta {_fmt(d.delta, precision)}"
                f" q {_fmt(d.q_certified, precision)}"
                f" iterations {d.iterations}"
                f" ratio {_fmt(d.max_ratio, precision)}"
                f" retries {d.retries}"
                f" fast_path {int(d.fast_path)}")
    lines.extend(extra)
    lines.extend(cfg.echo_lines())
    lines.append(f"wall_time_s = {wall:.3f}")
    return lines


def _cmd_solve(cfg: RunConfig, outdir: Path, seed: int) -> int:
    t0 = time.perf_counter()
    precision = cfg["output.precision"]
    model = build_model(cfg)
    scfg = build_solver_config(cfg)
    a, horizon = cfg["solver.origin"], cfg["solver.horizon"]
    tg = make_time_grid(a, horizon, scfg.time_step)
    op = model.operator(tg)
    outcome = extend_solution(op, a, horizon, scfg)
    write_trajectory_csv(outdir / "trajectory.csv", outcome.trajectory(),
                         model.grid, precision)
    lines = summary_lines(cfg, outcome, [], seed, time.perf_counter() - t0, precision)
    (outdir / "summary").write_text("\n".join(lines) + "\n", encoding="utf-8")
    return _EXIT_BY_KIND[outcome.kind]


def _cmd_sweep(cfg: RunConfig, outdir: Path, seed: int) -> int:
    t0 = time.perf_counter()
    precision = cfg["output.precision"]
    model = build_model(cfg)
    scfg = build_solver_config(cfg)
    family_name = cfg["sweep.family"]
    count = cfg["sweep.count"]
    builders = {
        "delay_velocity": lab.delay_velocity_family,
        "firing_steepness": lab.firing_steepness_family,
        "firing_threshold": lab.firing_threshold_family,
        "kernel_amplitude": lab.kernel_amplitude_family,
        "prehistory_shift": lab.prehistory_shift_family,
    }
    family = builders[family_name](model, count=count)
    report = lab.run_dependence_sweep(family, cfg["sweep.gamma"], scfg,
                                      a=cfg["solver.origin"])
    write_dependence_csv(outdir / "dependence.csv", report, precision)
    lines = summary_lines(cfg, None, report.lines(), seed,
                          time.perf_counter() - t0, precision)
    (outdir / "summary").write_text("\n".join(lines) + "\n", encoding="utf-8")
    return 0


def _cmd_oracle(cfg: RunConfig, outdir: Path, seed: int) -> int:
    t0 = time.perf_counter()
    precision = cfg["output.precision"]
    scfg = build_solver_config(cfg)
    name = cfg["oracle.name"]
    params = {}
    if name in ("example21", "piecewise_example21"):
        params["lam"] = cfg["oracle.lambda"]
    if name == "example31":
        params["amplitude"] = cfg["oracle.amplitude"]
    oracle = scenarios.make_scenario(name, **params)
    report, outcome = lab.verify_oracle(oracle, scfg)
    if outcome is not None and name == "example21":
        traj = outcome.trajectory()

        class _ScalarGrid:
            points = np.zeros((1, 1))
            npoints = 1
        write_trajectory_csv(outdir / "trajectory.csv", traj, _ScalarGrid(), precision)
    elif outcome is not None and name == "zero_field":
        model = scenarios.zero_field_model()
        write_trajectory_csv(outdir / "trajectory.csv", outcome.trajectory(),
                             model.grid, precision)
    lines = summary_lines(cfg, outcome, report.lines(), seed,
                          time.perf_counter() - t0, precision)
    (outdir / "summary").write_text("\n".join(lines) + "\n", encoding="utf-8")
    if not report.passed:
        return 1
    if outcome is not None:
        return _EXIT_BY_KIND[outcome.kind]
    return 0


def _cmd_validate(cfg: RunConfig, outdir: Path, seed: int) -> int:
    t0 = time.perf_counter()
    precision = cfg["output.precision"]
    model = build_model(cfg)
    report = validate_assumptions(model, horizon=cfg["solver.horizon"],
                                  samples=cfg["validate.samples"], seed=seed,
                                  decay_tol=cfg["validate.decay_tol"],
                                  dt=cfg["solver.time_step"])
    lines = summary_lines(cfg, None, report.lines(), seed,
                          time.perf_counter() - t0, precision)
    (outdir / "summary").write_text("\n".join(lines) + "\n", encoding="utf-8")
    for line in report.lines():
        print(line)
    if not report.passed and cfg["validate.severity"] == "fatal":
        return 1
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="nfield",
        description="Solve delayed neural-field integral equations and run "
                    "wellposedness experiments.")
    parser.add_argument("--config", required=True, help="path to a run configuration file")
    parser.add_argument("--command", default=None,
                        choices=["solve", "sweep", "oracle", "validate"],
                        help="override the command from the config file")
    parser.add_argument("--out", default=None, help="output directory")
    parser.add_argument("--seed", type=int, default=None, help="override the seed")
    parser.add_argument("--override", action="append", default=[],
                        metavar="KEY=VALUE", help="override a config entry (repeatable)")
    args = parser.parse_args(argv)

    try:
        cfg = parse_config(args.config)
        overrides = list(args.override)
        if args.command:
            overrides.append(f"command={args.command}")
        if args.seed is not None:
            overrides.append(f"seed={args.seed}")
        if args.out is not None:
            overrides.append(f"output.directory={args.out}")
        if overrides:
            cfg = apply_overrides(cfg, overrides)
        outdir = Path(cfg["output.directory"])
        outdir.mkdir(parents=True, exist_ok=True)
        seed = cfg["seed"]
        command = cfg["command"]
        handler = {"solve": _cmd_solve, "sweep": _cmd_sweep,
                   "oracle": _cmd_oracle, "validate": _cmd_validate}[command]
        return handler(cfg, outdir, seed)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 1
    except (OSError, ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
