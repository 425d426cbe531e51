import json
import os

import numpy as np
import pytest

from aircrn import cli, model


@pytest.fixture(scope="module")
def tiny_path(tmp_path_factory):
    with open(model.builtin_scenario_path()) as fh:
        data = json.load(fh)
    data["name"] = "tiny-two-users"
    data["mission"]["period_s"] = 20
    data["nodes"]["users_m"] = [[200.0, 100.0], [270.0, 120.0]]
    path = tmp_path_factory.mktemp("scen") / "tiny.json"
    path.write_text(json.dumps(data))
    return str(path)


def _first_line(path):
    with open(path) as fh:
        return fh.readline().rstrip("\n")


# ---------------------------------------------------------------------------
# run
# ---------------------------------------------------------------------------


def test_run_writes_outputs(tiny_path, tmp_path):
    out = tmp_path / "run"
    code = cli.main(["run", "--scenario", tiny_path, "--scheme", "proposed",
                     "--out", str(out), "--epsilon", "0.05"])
    assert code == 0
    for name in ("trajectory.csv", "convergence.csv", "summary.json"):
        assert (out / name).exists(), name
    assert _first_line(out / "trajectory.csv") == "# schema=1"
    assert _first_line(out / "convergence.csv") == "# schema=1"

    cols = cli.read_trajectory_csv(out / "trajectory.csv")
    assert len(cols["n"]) == 20
    # cyclic pins survive the round trip
    assert cols["x_m"][0] == cols["x_m"][-1]
    assert cols["z_m"][0] == cols["z_m"][-1]
    assert np.all(cols["tx_power_w"] >= 0.0)
    assert {"theta_u1_deg", "plos_u2", "rate_bps_hz",
            "interference_w"} <= set(cols)

    with open(out / "summary.json") as fh:
        summary = json.load(fh)
    assert summary["metadata"]["schema"] == 1
    assert summary["scheme"] == "proposed"
    assert summary["converged"] is True
    assert summary["avg_rate_bps_hz"] > 0.0
    assert summary["metadata"]["scenario_digest"] == model.scenario_digest(
        model.load_scenario(tiny_path))


def test_run_trajectory_deterministic(tiny_path, tmp_path):
    out1, out2 = tmp_path / "a", tmp_path / "b"
    for out in (out1, out2):
        assert cli.main(["run", "--scenario", tiny_path, "--out", str(out),
                         "--epsilon", "0.05"]) == 0
    assert (out1 / "trajectory.csv").read_bytes() == \
        (out2 / "trajectory.csv").read_bytes()


def test_run_env_out_fallback(tiny_path, tmp_path, monkeypatch):
    out = tmp_path / "env_out"
    monkeypatch.setenv("AIRCRN_OUT", str(out))
    code = cli.main(["run", "--scenario", tiny_path, "--epsilon", "1e9"])
    assert code == 0
    assert (out / "summary.json").exists()


def test_run_without_out_fails(tiny_path, monkeypatch, capsys):
    monkeypatch.delenv("AIRCRN_OUT", raising=False)
    assert cli.main(["run", "--scenario", tiny_path]) == 1
    assert "output directory" in capsys.readouterr().err


def test_run_unknown_scheme_exits_1(tiny_path, tmp_path, capsys):
    code = cli.main(["run", "--scenario", tiny_path, "--scheme", "magic",
                     "--out", str(tmp_path / "x")])
    assert code == 1
    assert "proposed" in capsys.readouterr().err


def test_run_malformed_scenario_exits_1(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    code = cli.main(["run", "--scenario", str(bad),
                     "--out", str(tmp_path / "x")])
    assert code == 1
    assert capsys.readouterr().err


def test_run_iteration_cap_exits_2(tiny_path, tmp_path, capsys):
    code = cli.main(["run", "--scenario", tiny_path, "--out",
                     str(tmp_path / "x"), "--epsilon", "0",
                     "--max-iters", "1"])
    assert code == 2
    assert "iteration cap" in capsys.readouterr().err
    # outputs are still written for a truncated run
    assert (tmp_path / "x" / "summary.json").exists()


def test_run_infeasible_scenario_exits_3(tmp_path, capsys):
    with open(model.builtin_scenario_path()) as fh:
        data = json.load(fh)
    data["mission"]["period_s"] = 10  # circle cannot meet the speed cap
    path = tmp_path / "short.json"
    path.write_text(json.dumps(data))
    code = cli.main(["run", "--scenario", str(path),
                     "--out", str(tmp_path / "x")])
    assert code == 3
    assert "infeasible" in capsys.readouterr().err


def test_read_trajectory_rejects_missing_schema(tmp_path):
    path = tmp_path / "t.csv"
    path.write_text("n,x_m\n0,1.0\n")
    with pytest.raises(ValueError, match="schema"):
        cli.read_trajectory_csv(path)


# ---------------------------------------------------------------------------
# tradeoff-demo
# ---------------------------------------------------------------------------


def test_tradeoff_demo_defaults(tmp_path):
    out = tmp_path / "demo"
    assert cli.main(["tradeoff-demo", "--out", str(out)]) == 0
    with open(out / "tradeoff.csv") as fh:
        assert fh.readline().rstrip("\n") == "# schema=1"
        header = fh.readline().rstrip("\n").split(",")
        rows = [line.split(",") for line in fh if line.strip()]
    assert header[0] == "plan_altitude_m"
    assert len(rows) == 2 * 401
    alts = {float(r[0]) for r in rows}
    assert alts == {30.0, 100.0}
    i_exp = header.index("rate_expected_bps_hz")
    i_low = header.index("rate_lower_bps_hz")
    i_los = header.index("rate_los_bps_hz")
    for r in rows[:50]:
        assert float(r[i_los]) >= float(r[i_exp]) >= float(r[i_low]) - 1e-12


def test_tradeoff_demo_bad_path_exits_1(tmp_path, capsys):
    code = cli.main(["tradeoff-demo", "--out", str(tmp_path / "x"),
                     "--path", "1,2"])
    assert code == 1
    assert "--path" in capsys.readouterr().err


def test_tradeoff_demo_single_altitude_exits_1(tmp_path, capsys):
    code = cli.main(["tradeoff-demo", "--out", str(tmp_path / "x"),
                     "--altitudes", "50"])
    assert code == 1
    assert "altitude" in capsys.readouterr().err


# ---------------------------------------------------------------------------
# sweep
# ---------------------------------------------------------------------------


def test_sweep_gamma_two_values(tiny_path, tmp_path):
    out = tmp_path / "sweep"
    code = cli.main(["sweep", "--scenario", tiny_path, "--param", "Gamma",
                     "--values=-126,-121", "--schemes", "proposed",
                     "--epsilon", "1e9", "--out", str(out)])
    assert code == 0
    with open(out / "rates.csv") as fh:
        assert fh.readline().rstrip("\n") == "# schema=1"
        header = fh.readline().rstrip("\n").split(",")
        rows = [line.rstrip("\n").split(",") for line in fh if line.strip()]
    assert header == ["param_value", "scheme", "avg_rate_bps_hz", "converged"]
    assert len(rows) == 2
    assert [float(r[0]) for r in rows] == [-126.0, -121.0]
    assert all(r[1] == "proposed" for r in rows)
    assert all(float(r[2]) > 0.0 for r in rows)
    # every cell keeps its own full run outputs
    cell_dirs = [d for d in os.listdir(out) if (out / d).is_dir()]
    assert len(cell_dirs) == 2
    for d in cell_dirs:
        assert (out / d / "summary.json").exists()


def test_sweep_unknown_param_exits_1(tiny_path, tmp_path, capsys):
    code = cli.main(["sweep", "--scenario", tiny_path, "--param", "Bogus",
                     "--values", "1", "--out", str(tmp_path / "x")])
    assert code == 1
    assert "Gamma" in capsys.readouterr().err


def test_sweep_empty_values_exits_1(tiny_path, tmp_path, capsys):
    code = cli.main(["sweep", "--scenario", tiny_path, "--param", "T",
                     "--values", "", "--out", str(tmp_path / "x")])
    assert code == 1
    assert "empty" in capsys.readouterr().err


def test_sweep_unknown_scheme_exits_1(tiny_path, tmp_path, capsys):
    code = cli.main(["sweep", "--scenario", tiny_path, "--param", "T",
                     "--values", "60", "--schemes", "nope",
                     "--out", str(tmp_path / "x")])
    assert code == 1
    assert "valid schemes" in capsys.readouterr().err
