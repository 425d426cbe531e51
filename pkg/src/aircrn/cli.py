"""Command-line surface: optimization runs, the altitude/rate tradeoff
demo, and parameter sweeps.

Exit codes for ``run``: 0 converged, 1 malformed input or unknown
scheme, 2 stopped at the iteration cap without meeting the gain
threshold, 3 infeasible (initialization or final audit).  All CSV files
start with a ``# schema=1`` header line; floats are written with 12
significant digits.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import channel, driver, energy, model

_F = "{:.12g}".format


def _resolve_out(arg_out: str | None) -> str | None:
    return arg_out if arg_out else os.environ.get("AIRCRN_OUT") or None


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        fh.write("# schema=1\n")
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_F(v) if isinstance(v, float) else v for v in row])


def write_run_outputs(report: driver.RunReport, sc: model.Scenario,
                      out_dir: str) -> None:
    os.makedirs(out_dir, exist_ok=True)
    cfg = driver.scheme_config(report.scheme)
    mode = cfg.mode
    dv = report.dv
    n = sc.n_slots
    r_count = sc.n_users

    rates = model.rate_matrix(sc, dv.P, dv.q, dv.z, mode)
    interference = model.interference_watts(sc, dv.P, dv.q, dv.z, mode)
    (r_users, _, theta_users), (r_d, _, theta_d) = model.slot_geometry(
        sc, dv.q, dv.z)
    plos_users = channel.los_probability(theta_users, sc.cp)
    plos_d = channel.los_probability(theta_d, sc.cp)
    scheduled = np.argmax(dv.A, axis=0)
    v_xy = dv.v_xy
    v_z = dv.v_z

    header = ["n", "x_m", "y_m", "z_m", "vx_mps", "vy_mps", "vz_mps",
              "tx_power_w", "scheduled_user"]
    for r in range(r_count):
        header += [f"theta_u{r + 1}_deg", f"plos_u{r + 1}"]
    header += ["theta_d_deg", "plos_d", "rate_bps_hz", "interference_w"]
    rows = []
    for slot in range(n):
        vx, vy = (v_xy[slot] if slot < n - 1 else (0.0, 0.0))
        vz = v_z[slot] if slot < n - 1 else 0.0
        row = [slot, float(dv.q[slot, 0]), float(dv.q[slot, 1]),
               float(dv.z[slot]), float(vx), float(vy), float(vz),
               float(dv.P[slot]), int(scheduled[slot])]
        for r in range(r_count):
            row += [float(theta_users[r, slot]), float(plos_users[r, slot])]
        row += [float(theta_d[slot]), float(plos_d[slot]),
                float(rates[scheduled[slot], slot]),
                float(interference[slot])]
        rows.append(row)
    _write_csv(os.path.join(out_dir, "trajectory.csv"), header, rows)

    conv_header = ["iteration", "objective_bps_hz", "obj_after_scheduling",
                   "obj_after_power", "obj_after_horizontal",
                   "obj_after_vertical", "max_residual", "wall_time_s"]
    conv_rows = [[rec.index, rec.objective,
                  rec.block_objectives.get("scheduling", rec.objective),
                  rec.block_objectives.get("power", rec.objective),
                  rec.block_objectives.get("horizontal", rec.objective),
                  rec.block_objectives.get("vertical", rec.objective),
                  rec.max_residual, rec.wall_time_s]
                 for rec in report.records]
    _write_csv(os.path.join(out_dir, "convergence.csv"), conv_header,
               conv_rows)

    hor_avg, ver_avg = energy.average_propulsion(v_xy, v_z, sc.rp, n_slots=n)
    summary = {
        "scheme": report.scheme,
        "avg_rate_bps_hz": report.objective,
        "iterations": report.iterations,
        "converged": report.converged,
        "hor_energy_avg_w": float(hor_avg),
        "ver_energy_avg_w": float(ver_avg),
        "final_interference_max_w": float(np.max(interference)),
        "metadata": {
            "schema": 1,
            "scenario_digest": report.scenario_digest,
            "scheme_mode": mode,
            "n_slots": n,
            "slot_s": sc.slot_s,
            "period_s": sc.period_s,
            "start": [sc.start.x, sc.start.y, sc.start.z],
            "users": [[u.x, u.y] for u in sc.users],
            "primary": [sc.primary.x, sc.primary.y],
            "warnings": report.warnings,
            "wall_time_s": report.wall_time_s,
        },
    }
    with open(os.path.join(out_dir, "summary.json"), "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_trajectory_csv(path):
    """Columns of a schema=1 trajectory.csv as {name: ndarray}."""
    with open(path) as fh:
        first = fh.readline().strip()
        if first != "# schema=1":
            raise ValueError(f"{path}: expected '# schema=1' header")
        reader = csv.reader(fh)
        header = next(reader)
        raw = [[float(v) for v in row] for row in reader if row]
    data = np.asarray(raw, dtype=float)
    return {name: data[:, j] for j, name in enumerate(header)}


def cmd_run(args) -> int:
    out_dir = _resolve_out(args.out)
    if out_dir is None:
        print("run: no output directory (use --out or AIRCRN_OUT)",
              file=sys.stderr)
        return 1
    try:
        cfg = driver.scheme_config(args.scheme)
    except ValueError as exc:
        print(f"run: {exc}", file=sys.stderr)
        return 1
    try:
        sc = model.load_scenario(args.scenario)
    except (model.ScenarioError, ValueError, OSError) as exc:
        print(f"run: {exc}", file=sys.stderr)
        return 1
    try:
        report = driver.optimize(sc, cfg, epsilon=args.epsilon,
                                 max_iters=args.max_iters,
                                 inner_iters=args.inner_iters)
    except model.ScenarioError as exc:
        print(f"run: infeasible: {exc}", file=sys.stderr)
        return 3
    except RuntimeError as exc:
        print(f"run: {exc}", file=sys.stderr)
        return 3
    write_run_outputs(report, sc, out_dir)
    for msg in report.warnings:
        print(f"run: warning: {msg}", file=sys.stderr)
    if not report.audit.feasible:
        print("run: final iterate failed the feasibility audit",
              file=sys.stderr)
        return 3
    if not report.converged:
        print("run: stopped at the iteration cap before the gain threshold",
              file=sys.stderr)
        return 2
    return 0


def _parse_xy(text: str, what: str):
    parts = text.split(",")
    if len(parts) != 2:
        raise ValueError(f"{what} must be X,Y (got {text!r})")
    return float(parts[0]), float(parts[1])


def cmd_tradeoff_demo(args) -> int:
    out_dir = _resolve_out(args.out)
    if out_dir is None:
        print("tradeoff-demo: no output directory (use --out or AIRCRN_OUT)",
              file=sys.stderr)
        return 1
    try:
        altitudes = [float(v) for v in args.altitudes.split(",") if v != ""]
        if len(altitudes) < 2:
            raise ValueError("need at least two altitude plans")
        user = _parse_xy(args.user, "--user")
        ends = args.path.split(":")
        if len(ends) != 2:
            raise ValueError(f"--path must be X1,Y1:X2,Y2 (got {args.path!r})")
        p_start = _parse_xy(ends[0], "--path start")
        p_end = _parse_xy(ends[1], "--path end")
    except ValueError as exc:
        print(f"tradeoff-demo: {exc}", file=sys.stderr)
        return 1

    sc = model.load_builtin_scenario()
    cp = sc.cp
    power = sc.tx_ave_w
    samples = args.samples
    frac = np.linspace(0.0, 1.0, samples)
    xs = p_start[0] + frac * (p_end[0] - p_start[0])
    ys = p_start[1] + frac * (p_end[1] - p_start[1])
    r_xy = np.hypot(xs - user[0], ys - user[1])

    os.makedirs(out_dir, exist_ok=True)
    header = ["plan_altitude_m", "n", "x_m", "y_m", "plos",
              "rate_los_bps_hz", "rate_expected_bps_hz", "rate_lower_bps_hz"]
    rows = []
    for alt in altitudes:
        theta = channel.elevation_deg(r_xy, alt)
        plos = channel.los_probability(theta, cp)
        d = np.sqrt(r_xy ** 2 + alt ** 2)
        rate_los = channel.rate(power, d, channel.LOS, cp)
        rate_exp = channel.expected_rate(power, d, theta, cp)
        rate_low = channel.lower_bound_rate(power, d, theta, cp)
        for i in range(samples):
            rows.append([float(alt), i, float(xs[i]), float(ys[i]),
                         float(plos[i]), float(rate_los[i]),
                         float(rate_exp[i]), float(rate_low[i])])
    _write_csv(os.path.join(out_dir, "tradeoff.csv"), header, rows)
    return 0


_SWEEP_PARAMS = {
    "Gamma": "interference_cap_w",
    "T": "period_s",
    "P_hor_ave": "propulsion_hor_ave_w",
    "P_ver_ave": "propulsion_ver_ave_w",
}


def _sweep_cell(sc, param, value, scheme, cell_dir, epsilon, max_iters):
    """One (value, scheme) sweep cell; returns a rates.csv row."""
    field = _SWEEP_PARAMS[param]
    if param == "Gamma":
        sc_cell = sc.with_overrides(interference_cap_w=10.0 ** (value / 10.0))
    else:
        sc_cell = sc.with_overrides(**{field: value})
    try:
        report = driver.optimize(sc_cell, scheme, epsilon=epsilon,
                                 max_iters=max_iters)
        write_run_outputs(report, sc_cell, cell_dir)
        return [value, scheme, report.objective, int(report.converged)]
    except Exception as exc:  # cell failures recorded, sweep continues
        os.makedirs(cell_dir, exist_ok=True)
        with open(os.path.join(cell_dir, "error.txt"), "w") as fh:
            fh.write(f"{type(exc).__name__}: {exc}\n")
        return [value, scheme, math.nan, 0]


def cmd_sweep(args) -> int:
    out_dir = _resolve_out(args.out)
    if out_dir is None:
        print("sweep: no output directory (use --out or AIRCRN_OUT)",
              file=sys.stderr)
        return 1
    if args.param not in _SWEEP_PARAMS:
        print(f"sweep: unknown parameter {args.param!r}; valid: "
              f"{', '.join(_SWEEP_PARAMS)}", file=sys.stderr)
        return 1
    try:
        values = [float(v) for v in args.values.split(",") if v != ""]
        schemes = [s for s in args.schemes.split(",") if s != ""]
        for s in schemes:
            driver.scheme_config(s)
        sc = model.load_scenario(args.scenario)
    except (model.ScenarioError, ValueError, OSError) as exc:
        print(f"sweep: {exc}", file=sys.stderr)
        return 1
    if not values or not schemes:
        print("sweep: empty value or scheme list", file=sys.stderr)
        return 1

    os.makedirs(out_dir, exist_ok=True)
    cells = []
    for value in values:
        for scheme in schemes:
            tag = f"{args.param}_{_F(value)}_{scheme}".replace("/", "-")
            cells.append((value, scheme, os.path.join(out_dir, tag)))

    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            futures = [pool.submit(_sweep_cell, sc, args.param, value, scheme,
                                   cell_dir, args.epsilon, args.max_iters)
                       for value, scheme, cell_dir in cells]
            rows = [f.result() for f in futures]
    else:
        rows = [_sweep_cell(sc, args.param, value, scheme, cell_dir,
                            args.epsilon, args.max_iters)
                for value, scheme, cell_dir in cells]

    _write_csv(os.path.join(out_dir, "rates.csv"),
               ["param_value", "scheme", "avg_rate_bps_hz", "converged"],
               rows)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="aircrn",
        description="Energy-constrained aerial relay trajectory/power/"
                    "scheduling optimizer")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="optimize one scenario")
    run.add_argument("--scenario", required=True)
    run.add_argument("--scheme", default="proposed")
    run.add_argument("--out", default=None)
    run.add_argument("--epsilon", type=float, default=None)
    run.add_argument("--max-iters", type=int, default=None)
    run.add_argument("--inner-iters", type=int, default=1)
    run.set_defaults(func=cmd_run)

    demo = sub.add_parser("tradeoff-demo",
                          help="LoS probability vs rate across altitudes")
    demo.add_argument("--altitudes", default="30,100")
    demo.add_argument("--user", default="0,0")
    demo.add_argument("--path", default="-200,0:200,0")
    demo.add_argument("--samples", type=int, default=401)
    demo.add_argument("--out", default=None)
    demo.set_defaults(func=cmd_tradeoff_demo)

    sweep = sub.add_parser("sweep", help="grid of runs over one parameter")
    sweep.add_argument("--scenario", required=True)
    sweep.add_argument("--param", required=True,
                       help="Gamma (dBW), T (s), P_hor_ave (W), P_ver_ave (W)")
    sweep.add_argument("--values", required=True,
                       help="comma-separated values in the parameter's unit")
    sweep.add_argument("--schemes", default="proposed")
    sweep.add_argument("--jobs", type=int, default=1)
    sweep.add_argument("--epsilon", type=float, default=None)
    sweep.add_argument("--max-iters", type=int, default=None)
    sweep.add_argument("--out", default=None)
    sweep.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


def console_main() -> None:
    raise SystemExit(main())


if __name__ == "__main__":
    console_main()
