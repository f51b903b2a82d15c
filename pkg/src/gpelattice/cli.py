"""Command-line front end: every pipeline as a reproducible batch command."""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .bands import bands_to_csv, bloch_bands, count_bound_states, effective_mass
from .classical import classical_period, classical_trajectory
from .config import ConfigError, RunConfig, config_from_dict, load_config, parse_schedule
from .field import csv_float, snapshot_sidecar, snapshot_to_csv
from .pipeline import (CalibrationTable, ExtractionError, RunSetup, calibrate_depth,
                       extract_period, mzi_readout, run_point, scan)
from .propagator import (ConvergenceError, NumericsError, ground_state,
                         quench_and_evolve, save_checkpoint)
from .units import PhaseSchedule, to_dimensionless

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICS = 3

FIG2A_COMBOS = ((0.1, 1 / 50), (1.0, 1 / 50), (0.1, 1 / 262), (1.0, 1 / 262))


def _out_dir(args, cfg: RunConfig, command: str) -> Path:
    base = Path(args.out) if args.out else Path(cfg.output_dir) / command
    base.mkdir(parents=True, exist_ok=True)
    return base


def _write_manifest(out: Path, command: str, cfg: RunConfig, argv) -> None:
    manifest = {
        "command": command,
        "argv": list(argv),
        "config": cfg.echo(),
        "version": __version__,
        "threads": {
            "OMP_NUM_THREADS": os.environ.get("OMP_NUM_THREADS"),
            "MKL_NUM_THREADS": os.environ.get("MKL_NUM_THREADS"),
        },
    }
    with open(out / "manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=1, sort_keys=True)
        fh.write("\n")


def _setup(cfg: RunConfig) -> RunSetup:
    return RunSetup(phys=cfg.physical_params(), grid=cfg.grid(),
                    theta0_deg=cfg.theta0_deg, dt=cfg.dt, gs_tol=cfg.gs_tol)


def _cmd_ground_state(args, cfg: RunConfig, argv) -> int:
    out = _out_dir(args, cfg, "ground-state")
    setup = _setup(cfg)
    result = ground_state(setup.sim, setup.grid, tol=cfg.gs_tol)
    from .field import save_field_dump
    save_field_dump(out / "ground_state.field", result.field)
    report = {"energy": result.energy, "steps": result.steps,
              "converged": result.converged}
    with open(out / "ground_state.json", "w") as fh:
        json.dump(report, fh, indent=1, sort_keys=True)
        fh.write("\n")
    _write_manifest(out, "ground-state", cfg, argv)
    print(f"ground state energy = {result.energy:.9f} ({result.steps} steps)")
    return EXIT_OK


def _cmd_evolve(args, cfg: RunConfig, argv) -> int:
    out = _out_dir(args, cfg, "evolve")
    setup = _setup(cfg)
    sim = setup.sim
    schedule_spec = args.snapshots or cfg.snapshots
    if not schedule_spec:
        raise ConfigError(["evolve needs a snapshot schedule "
                           "(--snapshots or the 'snapshots' config key)"])
    times = parse_schedule(schedule_spec, sim.time_unit)
    psi0 = ground_state(sim, setup.grid, tol=cfg.gs_tol).field
    snapshots, fields = quench_and_evolve(psi0, setup.theta0, sim, times,
                                          dt_max=cfg.dt, keep_fields=True)
    for i, snap in enumerate(snapshots):
        snapshot_to_csv(snap, out / f"snapshot_{i:03d}.csv")
        snapshot_sidecar(snap, out / f"snapshot_{i:03d}.json")
    save_checkpoint(str(out / "final"), fields[-1], sim,
                    PhaseSchedule.quench(sim.gamma, setup.theta0),
                    t=float(times[-1]), dt=cfg.dt)
    _write_manifest(out, "evolve", cfg, argv)
    print(f"evolved {len(snapshots)} snapshots to t = {times[-1]:.4f} "
          f"(norm {snapshots[-1].norm:.9f})")
    return EXIT_OK


def _cmd_scan_period(args, cfg: RunConfig, argv) -> int:
    out = _out_dir(args, cfg, "scan-period")
    setup = _setup(cfg)
    s_values = list(cfg.scan_values) or [1.5, 2.0, 2.5, 3.0, 3.21, 3.5, 4.0, 4.5, 5.0, 6.0]
    results = {}
    for beta, omega in FIG2A_COMBOS:
        phys = replace(setup.phys, beta=beta)
        # fix the dimensionless trap frequency for this combo
        time_unit = to_dimensionless(phys).time_unit
        phys = replace(phys, omega_ext=omega / time_unit)
        combo_setup = replace(setup, phys=phys)
        results[(beta, omega)] = scan("s", s_values, combo_setup, "period")
    theta0 = setup.theta0
    with open(out / "period_vs_s.csv", "w") as fh:
        heads = [f"period_b{beta}_w{int(round(1/omega))}" for beta, omega in FIG2A_COMBOS]
        sig_heads = [h.replace("period", "sigma") for h in heads]
        fh.write("s," + ",".join(heads) + "," + ",".join(sig_heads) + ",period_classical\n")
        for i, s in enumerate(s_values):
            row = [csv_float(s)]
            sigs = []
            for combo in FIG2A_COMBOS:
                p = results[combo].points[i]
                row.append("" if p.observable is None else csv_float(p.observable))
                sigs.append("" if p.sigma is None else csv_float(p.sigma))
            classical = classical_period(s, theta0)
            fh.write(",".join(row + sigs + [csv_float(classical)]) + "\n")
    for combo, res in results.items():
        beta, omega = combo
        res.to_json(out / f"scan_b{beta}_w{int(round(1/omega))}.json")
    _write_manifest(out, "scan-period", cfg, argv)
    ref = results[(1.0, 1 / 262)].points[min(range(len(s_values)),
                                             key=lambda i: abs(s_values[i] - 3.21))]
    if ref.observable is not None:
        print(f"period(s={ref.value}) = {ref.observable:.4f} +- {ref.sigma:.4f} "
              f"(beta=1, w=1/262)")
    else:
        print(f"period scan finished; point s={ref.value} failed: {ref.status}")
    return EXIT_OK


def _cmd_scan_theta(args, cfg: RunConfig, argv) -> int:
    out = _out_dir(args, cfg, "scan-theta")
    setup = _setup(cfg)
    values = list(cfg.scan_values) or [30, 40, 50, 60, 70, 80]
    res = scan("theta0", values, setup, "period")
    with open(out / "period_vs_theta0.csv", "w") as fh:
        fh.write("theta0_deg,period,sigma,period_classical,status\n")
        for p in res.points:
            classical = (classical_period(setup.phys.depth, math.radians(p.value))
                         if 0 < p.value < 90 else float("nan"))
            obs = "" if p.observable is None else csv_float(p.observable)
            sig = "" if p.sigma is None else csv_float(p.sigma)
            fh.write(f"{csv_float(p.value)},{obs},{sig},{csv_float(classical)},{p.status}\n")
    res.to_json(out / "scan_theta.json")
    _write_manifest(out, "scan-theta", cfg, argv)
    periods = [p.observable for p in res.points if p.observable is not None]
    if periods:
        spread = (max(periods) - min(periods)) / (sum(periods) / len(periods))
        print(f"period over theta0 {values}: mean = {np.mean(periods):.4f}, "
              f"spread = {100 * spread:.2f}%")
    return EXIT_OK


def _cmd_scan_delay(args, cfg: RunConfig, argv) -> int:
    out = _out_dir(args, cfg, "scan-delay")
    setup = _setup(cfg)
    values = list(cfg.scan_values) or [20, 30, 40, 50, 60]
    runs = {"center": scan("theta0", values, setup, "delay")}
    if args.s_band:
        for label, ds in (("low", -args.s_band), ("high", +args.s_band)):
            phys = replace(setup.phys, depth=setup.phys.depth + ds)
            runs[label] = scan("theta0", values, replace(setup, phys=phys), "delay")
    with open(out / "delay_vs_theta0.csv", "w") as fh:
        cols = ["theta0_deg", "delay_us", "sigma_us", "status"]
        if args.s_band:
            cols += ["delay_us_low_s", "delay_us_high_s"]
        fh.write(",".join(cols) + "\n")
        for i, p in enumerate(runs["center"].points):
            row = [csv_float(p.value),
                   "" if p.observable is None else csv_float(p.observable),
                   "" if p.sigma is None else csv_float(p.sigma),
                   p.status]
            if args.s_band:
                for label in ("low", "high"):
                    q = runs[label].points[i]
                    row.append("" if q.observable is None else csv_float(q.observable))
            fh.write(",".join(row) + "\n")
    runs["center"].to_json(out / "scan_delay.json")
    _write_manifest(out, "scan-delay", cfg, argv)
    resolved = [(p.value, p.observable) for p in runs["center"].points
                if p.observable is not None]
    line = ", ".join(f"{v:.0f}deg: {d:.1f}us" for v, d in resolved)
    unres = [f"{p.value:.0f}deg" for p in runs["center"].points if p.status == "unresolvable"]
    if unres:
        line += "; unresolvable at " + ", ".join(unres)
    print(f"tunneling delay: {line}")
    return EXIT_OK


def _cmd_mzi(args, cfg: RunConfig, argv) -> int:
    out = _out_dir(args, cfg, "mzi")
    setup = _setup(cfg)
    point = run_point(setup, "mzi")
    if point.observable is None:
        raise ExtractionError(f"MZI readout failed: {point.status}")
    payload = {"ratio": point.observable, "phi": point.diagnostics.get("phi"),
               "t_read": point.diagnostics.get("t_read"),
               "period": point.diagnostics.get("period"),
               "theta0_deg": setup.theta0_deg}
    with open(out / "mzi.json", "w") as fh:
        json.dump(payload, fh, indent=1, sort_keys=True)
        fh.write("\n")
    _write_manifest(out, "mzi", cfg, argv)
    print(f"MZI ratio Pi-1/(Pi1+Pi-1) = {point.observable:.4f} "
          f"(phi = {payload['phi']:.4f} rad)")
    return EXIT_OK


def _cmd_bands(args, cfg: RunConfig, argv) -> int:
    out = _out_dir(args, cfg, "bands")
    sim = to_dimensionless(cfg.physical_params())
    bands = bloch_bands(sim.gamma, n_q=64, n_pw=33)
    bands_to_csv(bands, out / "bands.csv")
    n_bound = count_bound_states(bands)
    em = effective_mass(bands, omega_ext=sim.omega_ext)
    report = {"s": cfg.depth_s, "gamma": sim.gamma, "bound_states": n_bound,
              "mass_ratio": em.mass_ratio, "omega_dip": em.omega_dip}
    with open(out / "bands.json", "w") as fh:
        json.dump(report, fh, indent=1, sort_keys=True)
        fh.write("\n")
    _write_manifest(out, "bands", cfg, argv)
    print(f"s = {cfg.depth_s}: {n_bound} bound bands, m*/m = {em.mass_ratio:.3f}")
    return EXIT_OK


def _cmd_classical(args, cfg: RunConfig, argv) -> int:
    out = _out_dir(args, cfg, "classical")
    theta0 = math.radians(cfg.theta0_deg)
    period = classical_period(cfg.depth_s, theta0)
    traj = classical_trajectory(cfg.depth_s, theta0)
    with open(out / "classical.csv", "w") as fh:
        fh.write("t,x,p,energy\n")
        stride = max(1, len(traj.t) // 2000)
        for i in range(0, len(traj.t), stride):
            fh.write(f"{csv_float(traj.t[i])},{csv_float(traj.x[i])},"
                     f"{csv_float(traj.p[i])},{csv_float(traj.energy[i])}\n")
    with open(out / "classical.json", "w") as fh:
        json.dump({"s": cfg.depth_s, "theta0_deg": cfg.theta0_deg,
                   "period_closed_form": period, "period_integrator": traj.period},
                  fh, indent=1, sort_keys=True)
        fh.write("\n")
    _write_manifest(out, "classical", cfg, argv)
    print(f"classical period = {period:.6f} (integrator {traj.period:.6f})")
    return EXIT_OK


def _cmd_calibrate(args, cfg: RunConfig, argv) -> int:
    sim = to_dimensionless(cfg.physical_params())
    period = args.period_us * 1e-6 / sim.time_unit
    sigma = args.sigma * 1e-6 / sim.time_unit
    table = (CalibrationTable.from_csv(args.table) if args.table
             else CalibrationTable.packaged_default())
    result = calibrate_depth(period, sigma, table)
    print(f"s0 = {result.depth:.2f} +- {result.sigma:.2f}")
    if args.out:
        out = _out_dir(args, cfg, "calibrate")
        with open(out / "calibration.json", "w") as fh:
            json.dump({"period_us": args.period_us, "sigma_us": args.sigma,
                       "s0": result.depth, "s0_sigma": result.sigma},
                      fh, indent=1, sort_keys=True)
            fh.write("\n")
        _write_manifest(out, "calibrate", cfg, argv)
    return EXIT_OK


_COMMANDS = {
    "ground-state": (_cmd_ground_state, True),
    "evolve": (_cmd_evolve, True),
    "scan-period": (_cmd_scan_period, True),
    "scan-theta": (_cmd_scan_theta, True),
    "scan-delay": (_cmd_scan_delay, True),
    "mzi": (_cmd_mzi, True),
    "bands": (_cmd_bands, True),
    "classical": (_cmd_classical, True),
    "calibrate": (_cmd_calibrate, False),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gpelattice",
        description="GPE simulator for tunneling dynamics in a shifted optical lattice")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, needs_config) in _COMMANDS.items():
        p = sub.add_parser(name)
        p.add_argument("--config", help="JSON run-config file",
                       required=False, default=None)
        p.add_argument("--out", help="output directory", default=None)
        if name == "evolve":
            p.add_argument("--snapshots", default=None,
                           help="snapshot schedule start:stop:step[us|ms]")
        if name == "scan-delay":
            p.add_argument("--s-band", type=float, default=0.0,
                           help="also run at depth +- this value (uncertainty band)")
        if name == "calibrate":
            p.add_argument("--period-us", type=float, required=True,
                           help="measured dipole period in us")
            p.add_argument("--sigma", type=float, required=True,
                           help="period uncertainty in us")
            p.add_argument("--table", default=None,
                           help="calibration CSV (columns s, period); "
                                "defaults to the packaged table")
    return parser


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code != 0 else EXIT_OK
    handler, needs_config = _COMMANDS[args.command]
    try:
        if args.config:
            cfg = load_config(args.config)
        elif needs_config:
            print(f"error: {args.command} requires --config", file=sys.stderr)
            print(parser.format_usage(), file=sys.stderr, end="")
            return EXIT_CONFIG
        else:
            cfg = config_from_dict({})
        return handler(args, cfg, argv)
    except ConfigError as exc:
        for message in exc.messages:
            print(f"config error: {message}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericsError, ConvergenceError, ExtractionError, ValueError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICS


if __name__ == "__main__":
    raise SystemExit(main())
