from __future__ import annotations

import csv
import json

import pytest

from mlvec.cli import EXIT_INVALID, EXIT_NUMERICAL, EXIT_OK, main, resolve_config, ConfigError


def run(tmp_path, *args, name="out.json"):
    out = tmp_path / name
    code = main([*args, "--out", str(out)])
    return code, out


def test_oracle_free_value(tmp_path):
    code, out = run(tmp_path, "oracle", "--k", "1", "--p", "1", "--g", "0", "--M", "2", "--jmax", "3")
    assert code == EXIT_OK
    doc = json.loads(out.read_text(encoding="utf-8"))
    assert doc["result"]["value"] == pytest.approx([1.0, 0.0], abs=1e-12)
    assert doc["config"]["model"]["jmax"] == 3 and doc["config"]["observable"]["p"] == [1]
    log = (tmp_path / "out.json.log").read_text()
    assert "numpy" in log and "config seed = 0" in log


def test_bkar_check(tmp_path):
    code, out = run(tmp_path, "bkar-check", "--n", "3")
    assert code == EXIT_OK
    res = json.loads(out.read_text())["result"]
    assert max(res["residuals"].values()) < 1e-8 and res["forests"] == 7


def test_scan_csv_one_row_per_cell(tmp_path):
    code, out = run(tmp_path, "scan", "--jmax", "1", "--rho-grid", "0:0.1:0.2",
                    "--angle-grid", "-1.5:1.5:1.5", "--n-max", "2", name="scan.csv")
    assert code == EXIT_OK
    raw = out.read_bytes()
    assert raw.count(b"\r\n") == 1 + 9
    rows = list(csv.DictReader(out.open(newline="")))
    assert len(rows) == 9 and rows[0]["status"] == "ok"
    meta = json.loads((tmp_path / "scan.csv.meta.json").read_text())
    assert meta["config"]["engine"]["rho_grid"] == "0:0.1:0.2"
    assert meta["result"]["summary"]["cells"] == 9


def test_scan_plot_and_determinism(tmp_path):
    args = ["scan", "--jmax", "1", "--rho-grid", "0.05,0.2", "--angle-grid", "0,1.2",
            "--boundary", "--n-max", "2", "--plot"]
    assert main(args + ["--out", str(tmp_path / "a.csv")]) == EXIT_OK
    assert main(args + ["--out", str(tmp_path / "b.csv")]) == EXIT_OK
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
    assert (tmp_path / "a.png").exists()


def test_json_is_byte_deterministic(tmp_path):
    args = ["lve", "--jmax", "1", "--p", "1", "--g", "0.05", "--n-max", "3"]
    assert main(args + ["--out", str(tmp_path / "a.json")]) == EXIT_OK
    assert main(args + ["--out", str(tmp_path / "b.json")]) == EXIT_OK
    assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()


def test_config_file_and_flag_precedence(tmp_path):
    ini = tmp_path / "run.ini"
    ini.write_text("[model]\njmax = 1\ng = 0.05\n[observable]\np = 2\n[engine]\nn_max = 2\n")
    code, out = run(tmp_path, "lve", "--config", str(ini), "--n-max", "3")
    assert code == EXIT_OK
    doc = json.loads(out.read_text())
    assert doc["config"]["engine"]["n_max"] == 3
    assert doc["config"]["model"]["g"] == [0.05, 0.0]
    assert doc["result"]["momenta"] == [2]


def test_unknown_config_key(tmp_path):
    ini = tmp_path / "bad.ini"
    ini.write_text("[engine]\nbogus = 1\n")
    assert main(["oracle", "--config", str(ini)]) == EXIT_INVALID


@pytest.mark.parametrize("args", [
    ["oracle", "--p", "9"],
    ["oracle", "--k", "2", "--p", "1,2,3"],
    ["lve", "--n-max", "9"],
    ["series", "--order", "12"],
    ["scan", "--angle-grid", "0:0.5:2.0"],
    ["scan", "--plot"],
    ["bkar-check", "--n", "6"],
    ["oracle", "--g", "abc"],
    ["oracle", "--mc", "--g", "0.1,0.1"],
    ["lve", "--g", "0.1", "--g-polar", "0.1,0.2"],
])
def test_validation_errors(args, capsys):
    assert main(args) == EXIT_INVALID
    assert "invalid configuration" in capsys.readouterr().err


def test_numerical_failure_exit_code(tmp_path, capsys):
    code, _ = run(tmp_path, "lve", "--g", "-0.1", "--p", "1", "--n-max", "2")
    assert code == EXIT_NUMERICAL
    assert "BranchCut" in capsys.readouterr().err


def test_series_reexpand(tmp_path):
    code, out = run(tmp_path, "series", "--jmax", "1", "--p", "1", "--order", "2", "--reexpand",
                    "--n-max", "3", "--g", "0.05")
    assert code == EXIT_OK
    res = json.loads(out.read_text())["result"]
    assert res["coefficients"][0] == "1"
    assert max(res["lve_reexpansion"]["relative_difference"]) < 1e-5


def test_resolvent_and_grassmann(tmp_path):
    code, out = run(tmp_path, "resolvent-bound", "--samples", "1000", "--points", "3")
    assert code == EXIT_OK and json.loads(out.read_text())["result"]["ok"]
    code, out = run(tmp_path, "grassmann-check", "--instances", "50", name="g.json")
    assert code == EXIT_OK and json.loads(out.read_text())["result"]["mismatches"] == []


def test_resolvent_point_outside_cardioid(tmp_path):
    code, _ = run(tmp_path, "resolvent-bound", "--g-polar", "0.9,1.4")
    assert code == EXIT_INVALID


def test_observable_defaults():
    cfg = resolve_config("oracle", {"k": "3", "p": "2"})
    assert cfg["p"] == [2, 2, 2]
    cfg = resolve_config("oracle", {"k": "0"})
    assert cfg["p"] == []
    with pytest.raises(ConfigError):
        resolve_config("oracle", {"k": "-1"})


def test_stdout_output(capsys):
    assert main(["oracle", "--k", "0", "--g", "0", "--log", "/dev/null"]) == EXIT_OK
    doc = json.loads(capsys.readouterr().out)
    assert doc["result"]["value"] == pytest.approx([0.0, 0.0], abs=1e-12)
