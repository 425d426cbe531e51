import csv
import json

import pytest


def write_table(path, header, rows):
    with open(path, "w", newline="") as fh:
        fh.write("# schema=1\n")
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)
    return str(path)


TRAJ_HEADER = ["n", "x_m", "y_m", "z_m", "vx_mps", "vy_mps", "vz_mps",
               "tx_power_w", "scheduled_user", "theta_u1_deg", "plos_u1",
               "theta_u2_deg", "plos_u2", "theta_d_deg", "plos_d",
               "rate_bps_hz", "interference_w"]

CONV_HEADER = ["iteration", "objective_bps_hz", "obj_after_scheduling",
               "obj_after_power", "obj_after_horizontal",
               "obj_after_vertical", "max_residual", "wall_time_s"]


@pytest.fixture()
def run_dir(tmp_path):
    """Small synthetic result directory shaped like a real run's output."""
    rows = []
    for n in range(5):
        x = 100.0 + 10.0 * n
        rows.append([n, x, 50.0 + 5.0 * n, 80.0 + n, 10.0, 5.0, 1.0,
                     0.05, n % 2, 40.0 + n, 0.8, 35.0 + n, 0.7,
                     20.0 + n, 0.5, 3.0 + 0.1 * n, 1e-13])
    write_table(tmp_path / "trajectory.csv", TRAJ_HEADER, rows)

    conv = [[i, 5.0 + 0.5 * i, 5.1 + 0.5 * i, 5.2 + 0.5 * i,
             5.3 + 0.5 * i, 5.0 + 0.5 * (i + 1), 1e-9, 2.0 * i]
            for i in range(4)]
    write_table(tmp_path / "convergence.csv", CONV_HEADER, conv)

    summary = {
        "scheme": "proposed",
        "avg_rate_bps_hz": 6.5,
        "iterations": 4,
        "converged": True,
        "metadata": {
            "schema": 1,
            "scenario_digest": "abc123",
            "n_slots": 5,
            "start": [336.0, 187.0, 30.0],
            "users": [[162.0, 23.0], [112.0, 301.0]],
            "primary": [225.0, 350.0],
            "warnings": [],
            "wall_time_s": 8.0,
        },
    }
    with open(tmp_path / "summary.json", "w") as fh:
        json.dump(summary, fh, indent=2)
    return tmp_path


@pytest.fixture()
def sweep_csv(tmp_path):
    rows = []
    for scheme in ("proposed", "npc"):
        for v, r in [(-131.0, 4.0), (-121.0, 5.5), (-96.0, 6.0)]:
            rows.append([v, scheme, r + (0.5 if scheme == "proposed" else 0),
                         "True"])
    return write_table(tmp_path / "rates.csv",
                       ["param_value", "scheme", "avg_rate_bps_hz",
                        "converged"], rows)


@pytest.fixture()
def tradeoff_csv(tmp_path):
    rows = []
    for alt in (30.0, 100.0):
        for i, x in enumerate([-200.0, -100.0, 0.0, 100.0, 200.0]):
            p = 0.5 + alt / 1000.0
            rows.append([alt, i, x, 0.0, p, 6.0, 5.0 - alt / 100.0,
                         4.9 - alt / 100.0])
    return write_table(tmp_path / "tradeoff.csv",
                       ["plan_altitude_m", "n", "x_m", "y_m", "plos",
                        "rate_los_bps_hz", "rate_expected_bps_hz",
                        "rate_lower_bps_hz"], rows)
