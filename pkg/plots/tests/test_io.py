import csv

import numpy as np
import pytest

from aircrn_plots import io


def write_table(path, header, rows):
    with open(path, "w", newline="") as fh:
        fh.write("# schema=1\n")
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)
    return str(path)


def test_read_table_numeric_and_string_columns(sweep_csv):
    t = io.read_table(sweep_csv)
    assert t["param_value"].dtype == np.float64
    assert t["avg_rate_bps_hz"].dtype == np.float64
    assert t["scheme"].dtype == object
    assert set(t["scheme"]) == {"proposed", "npc"}
    assert set(t["converged"]) == {"True"}
    assert len(t["param_value"]) == 6


def test_read_table_rejects_missing_schema_line(tmp_path):
    path = tmp_path / "rates.csv"
    path.write_text("param_value,scheme\n1,proposed\n")
    with pytest.raises(io.SchemaError, match="schema=1"):
        io.read_table(str(path))


def test_read_table_rejects_empty_file(tmp_path):
    path = tmp_path / "rates.csv"
    path.write_text("# schema=1\n")
    with pytest.raises(io.SchemaError, match="header"):
        io.read_table(str(path))


def test_read_summary_checks_metadata_schema(run_dir, tmp_path):
    data = io.read_summary(str(run_dir / "summary.json"))
    assert data["metadata"]["schema"] == 1
    bad = tmp_path / "other"
    bad.mkdir()
    with open(bad / "summary.json", "w") as fh:
        fh.write('{"scheme": "proposed"}')
    with pytest.raises(io.SchemaError, match="metadata.schema"):
        io.read_summary(str(bad / "summary.json"))


def test_require_names_the_missing_column(tmp_path):
    path = write_table(tmp_path / "trajectory.csv", ["n", "x_m"],
                       [[0, 1.0]])
    t = io.read_table(path)
    with pytest.raises(io.MissingColumnError) as err:
        io.require(t, ["n", "x_m", "z_m"], path)
    assert "z_m" in str(err.value)
    assert path in str(err.value)
