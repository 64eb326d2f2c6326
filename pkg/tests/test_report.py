import csv
import json
import math

import numpy as np
import pytest

from dicke_battery import __version__
from dicke_battery.analytic import fit_decay_rate
from dicke_battery.config import parse_config
from dicke_battery.lindblad import integrate
from dicke_battery.params import SimulationParams
from dicke_battery.report import (
    SWEEP_COLUMNS,
    TRAJECTORY_COLUMNS,
    format_cell,
    metadata_path,
    run_oracle_report,
    write_oracle_report,
    write_sweep,
    write_trajectory,
)
from dicke_battery.sweep import SweepSpec, run_sweep


def read_rows(path):
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def test_format_cell():
    assert format_cell(None) == ""
    assert format_cell(float("nan")) == ""
    assert format_cell(True) == "true"
    assert format_cell(3) == "3"
    assert float(format_cell(0.1)) == 0.1
    x = 1 / 3
    assert format_cell(x) == "0.33333333333333331"


def test_trajectory_file(tmp_path):
    p = SimulationParams(n_atoms=3, t_max=10.0)
    cfg = parse_config(None, {"mode": "simulate", "n_atoms": 3, "t_max": 10.0})
    traj = integrate(p, keep_states=False)
    path = write_trajectory(traj, tmp_path / "traj.csv", cfg)
    raw = path.read_bytes()
    assert b"\r" not in raw and b"nan" not in raw.lower()
    rows = read_rows(path)
    assert list(rows[0]) == list(TRAJECTORY_COLUMNS)
    assert len(rows) == len(traj)
    first = rows[0]
    assert float(first["t"]) == 0 and float(first["W"]) == 0 and float(first["Q"]) == 0
    assert float(first["deltaF"]) == 0 and first["eta"] == ""
    for row, rec in zip(rows, traj.records):
        assert float(row["E"]) == rec.E and float(row["W"]) == rec.W
        F = float(row["E"]) - traj.temperature * float(row["S"])
        assert abs(F - float(row["F"])) <= 1e-12
    meta = json.loads(metadata_path(path).read_text())
    assert meta["version"] == __version__
    assert meta["config"] == cfg.to_dict()


def test_trajectory_file_is_deterministic(tmp_path):
    p = SimulationParams(n_atoms=6, t_max=20.0)
    a = write_trajectory(integrate(p, keep_states=False), tmp_path / "a.csv").read_bytes()
    b = write_trajectory(integrate(p, keep_states=False), tmp_path / "b.csv").read_bytes()
    assert a == b


def test_single_entry_sweep_file(tmp_path):
    res = run_sweep(SweepSpec(SimulationParams(t_max=150), 3, 3), workers=1)
    rows = read_rows(write_sweep(res, tmp_path / "s.csv"))
    assert list(rows[0]) == list(SWEEP_COLUMNS)
    assert [r["row"] for r in rows] == ["point", "n_opt"]
    assert rows[1]["N"] == "3"


def test_closed_system_rows_not_converged(tmp_path):
    res = run_sweep(SweepSpec(SimulationParams(gamma=0.0, t_max=30), 1, 2), workers=1)
    rows = read_rows(write_sweep(res, tmp_path / "s.csv"))
    assert all(r["converged"] == "false" for r in rows)


def test_sweep_summary_matches_rows(tmp_path):
    spec = SweepSpec(SimulationParams(t_max=150), 1, 6, gamma_values=[0.2, 0.4])
    path = write_sweep(run_sweep(spec, workers=1), tmp_path / "s.csv")
    rows = read_rows(path)
    points = [r for r in rows if r["row"] == "point"]
    for r in (r for r in rows if r["row"] == "n_opt"):
        mine = [x for x in points if x["gamma"] == r["gamma"] and x["converged"] == "true"]
        best = max(mine, key=lambda x: float(x["deltaF_ss"]))
        assert r["N"] == best["N"]
    meta = json.loads(metadata_path(path).read_text())
    assert set(meta["summary"]) == {"0.20000000000000001,1,0.20000000000000001",
                                    "0.40000000000000002,1,0.20000000000000001"}


def test_oracle_report_requires_single_atom():
    with pytest.raises(ValueError):
        run_oracle_report(SimulationParams(n_atoms=2))


def test_oracle_report_undriven(tmp_path):
    rep = run_oracle_report(SimulationParams(amplitude=0.0, t_max=30))
    assert np.ptp(rep.E_numeric) < 1e-12
    np.testing.assert_allclose(rep.E_closed_form, rep.E_numeric, atol=1e-12)
    np.testing.assert_allclose(rep.E_bloch, rep.E_numeric, atol=1e-12)
    assert rep.omega_fit is None
    rows = read_rows(write_oracle_report(rep, tmp_path / "o.csv"))
    assert len(rows) == rep.times.size


def test_oracle_report_weak_drive(tmp_path):
    p = SimulationParams(amplitude=0.1, gamma=0.02, nbar=0.0, t_max=400)
    rep = run_oracle_report(p)
    path = write_oracle_report(rep, tmp_path / "o.csv")
    summary = json.loads(metadata_path(path).read_text())["summary"]
    assert summary["omega_analytic"] == pytest.approx(rep.omega_analytic)
    assert summary["omega_fit"] == pytest.approx(rep.omega_analytic, rel=0.01)
    assert math.isfinite(summary["max_rel_dev_closed_form"])


def test_hotter_bath_relaxes_faster():
    rates = []
    for nbar in (0.0, 1.0):
        rep = run_oracle_report(SimulationParams(amplitude=0.1, gamma=0.02, nbar=nbar, t_max=300))
        rates.append(fit_decay_rate(rep.times, rep.E_numeric, math.pi))
    assert rates[1] > 2 * rates[0]
