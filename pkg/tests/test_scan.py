from __future__ import annotations

import math

import numpy as np
import pytest

from mlvec.model import ExternalMomenta, SliceConfig
from mlvec.scan import (COLUMNS, ScanTable, angle_grid_with_boundary, as_matrix, cardioid_scan,
                        parse_grid, uniformity_probe)

SC = SliceConfig(2, 1)


def test_parse_grid():
    assert parse_grid("0:0.1:0.3") == [0.0, 0.1, 0.2, 0.3]
    assert parse_grid("-1.5:0.5:1.5") == [-1.5, -1.0, -0.5, 0.0, 0.5, 1.0, 1.5]
    assert parse_grid("0.1, 0.4") == [0.1, 0.4]
    assert len(parse_grid("0:0.1:8")) == 81
    for bad in ("1:2", "0:-1:3", "3:1:1"):
        with pytest.raises(ValueError):
            parse_grid(bad)


def test_boundary_angle_appended_once():
    assert angle_grid_with_boundary([0.0])[-1] == math.pi / 2
    assert angle_grid_with_boundary([0.0, math.pi / 2]) == [0.0, math.pi / 2]


@pytest.fixture(scope="module")
def table():
    return cardioid_scan(SC, ExternalMomenta([1]), [0.0, 0.05, 0.3], [0.0, 1.0, math.pi / 2],
                         n_max=3)


def test_scan_rows(table):
    assert len(table.rows) == 9
    assert all(set(r) == set(COLUMNS) for r in table.rows)
    by_cell = {(r["modulus"], r["gamma"]): r for r in table.rows}
    assert by_cell[0.05, 0.0]["converged"] and by_cell[0.05, 0.0]["oracle_consistent"]
    assert by_cell[0.0, math.pi / 2]["status"] == "ok"
    for m in (0.05, 0.3):
        assert by_cell[m, math.pi / 2]["status"] == "BranchCut"
        assert not by_cell[m, math.pi / 2]["converged"]
    # no oracle column on the left half plane
    assert by_cell[0.3, math.pi / 2]["oracle_re"] == ""


def test_empirical_rho(table):
    rho, limited = table.empirical_rho()
    assert limited and rho >= 0.3


def test_empirical_rho_synthetic():
    t = ScanTable(SC, (1,), 3, 1.0)
    for g, conv in ((0.1, True), (0.2, True), (0.4, False)):
        t.rows.append({"modulus": g, "gamma": 0.5, "converged": conv})
    rho, limited = t.empirical_rho()
    assert rho == pytest.approx(0.2 / math.cos(0.5) ** 2) and not limited


def test_as_matrix(table):
    moduli, angles, vals = as_matrix(table, "error")
    assert vals.shape == (3, 3)
    assert np.isnan(vals[-1, -1])


def test_uniformity_probe_small():
    rep = uniformity_probe([0.02, 0.1], [0.0, 0.7, math.pi / 2], M=2, j_max_values=(1, 2),
                           n_max=3)
    assert rep.uniform and rep.half_pi_never_converges
    assert rep.compared + rep.excluded == 6
    assert set(rep.tables) == {(1, 1), (1, 2), (2, 1), (2, 2), (2, 4)}


def test_plot_scan(table, tmp_path):
    from mlvec.plotting import plot_scan, status_matrix
    _, _, status = status_matrix(table)
    assert status[-1, -1] == 3
    out = plot_scan(table, tmp_path / "scan.png")
    assert out.read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"
