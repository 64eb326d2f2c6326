"""Delimited-text writers and the report builders behind the CLI modes.

Every table is written with a JSON sidecar (``<name>.meta.json``) holding the
resolved configuration, so the table can be regenerated from the sidecar.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Iterable, Optional, Sequence

import numpy as np

from . import __version__
from .analytic import (
    fit_oscillation_frequency,
    integrate_bloch,
    rabi_amplitude,
    rabi_frequency,
    sigma_z_closed_form,
)
from .config import RunConfig
from .lindblad import Trajectory, integrate, integrate_hp
from .params import SimulationParams
from .sweep import ParallelComparison, SweepResult

TRAJECTORY_COLUMNS = (
    "t", "E", "S", "F", "deltaF", "deltaE", "deltaS", "W", "Q", "H_total", "eta",
    "first_law_residual", "trace_error", "min_eigenvalue",
)
SWEEP_COLUMNS = (
    "row", "N", "gamma", "A", "nbar", "deltaF_ss", "deltaF_ss_per_atom", "deltaS_ss",
    "deltaE_ss", "t_steady", "converged", "deltaF_mean", "error",
)
ORACLE_COLUMNS = (
    "t", "E_numeric", "E_closed_form", "E_bloch",
    "abs_dev_closed_form", "rel_dev_closed_form", "abs_dev_bloch", "rel_dev_bloch",
)
HP_COLUMNS = ("t", "deltaE_dicke", "deltaE_hp", "abs_dev", "rel_dev")
PARALLEL_COLUMNS = (
    "N", "collective_deltaF", "parallel_deltaF", "collective_deltaS", "parallel_deltaS",
    "collective_advantage",
)


def format_cell(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        if math.isnan(value):
            return ""
        return f"{float(value):.17g}"
    return str(value)


def metadata_path(path: Path) -> Path:
    path = Path(path)
    return path.with_name(path.stem + ".meta.json")


def write_table(
    path: Path,
    columns: Sequence[str],
    rows: Iterable[Sequence[Any]],
    config: Optional[RunConfig] = None,
    summary: Optional[dict] = None,
) -> Path:
    """Write a comma-delimited table plus its metadata sidecar."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([format_cell(v) for v in row])
    meta = {
        "version": __version__,
        "table": path.name,
        "columns": list(columns),
        "config": config.to_dict() if config is not None else None,
    }
    if summary is not None:
        meta["summary"] = summary
    with open(metadata_path(path), "w", encoding="utf-8", newline="\n") as fh:
        json.dump(meta, fh, indent=2, sort_keys=False)
        fh.write("\n")
    return path


def write_trajectory(traj: Trajectory, path: Path, config: Optional[RunConfig] = None) -> Path:
    if len(traj) == 0:
        raise ValueError("empty trajectory")
    rows = (
        (r.t, r.E, r.S, r.F, r.deltaF, r.deltaE, r.deltaS, r.W, r.Q, r.H_total, r.eta,
         r.first_law_residual, float(te), float(me))
        for r, te, me in zip(traj.records, traj.trace_errors, traj.min_eigenvalues)
    )
    return write_table(path, TRAJECTORY_COLUMNS, rows, config)


def _sweep_row(kind: str, e, result: SweepResult) -> list:
    r = e.result
    if r is None:
        return [kind, e.n_atoms, e.gamma, e.amplitude, e.nbar,
                None, None, None, None, None, False, None, e.error]
    return [kind, e.n_atoms, e.gamma, e.amplitude, e.nbar, r.deltaF_ss,
            r.deltaF_ss / e.n_atoms, r.deltaS_ss, r.deltaE_ss, r.t_steady, r.converged,
            r.deltaF_mean, e.error]


def write_sweep(result: SweepResult, path: Path, config: Optional[RunConfig] = None) -> Path:
    """One ``point`` row per grid point, then one ``n_opt`` row per parameter
    combination repeating the optimal point."""
    if not result.entries:
        raise ValueError("empty sweep result")
    rows = [_sweep_row("point", e, result) for e in result.entries]
    summary = {}
    for combo in result.combos():
        key = ",".join(format_cell(c) for c in combo)
        if combo in result.n_opt:
            opt = next(e for e in result.for_combo(combo) if e.n_atoms == result.n_opt[combo])
            rows.append(_sweep_row("n_opt", opt, result))
            summary[key] = {
                "n_opt": result.n_opt[combo],
                "objective": result.objective,
                "objective_value": result.objective_value_at_opt[combo],
            }
        if combo in result.flags:
            summary.setdefault(key, {})["flags"] = result.flags[combo]
    return write_table(path, SWEEP_COLUMNS, rows, config, summary)


@dataclass(frozen=True)
class OracleReport:
    times: np.ndarray
    E_numeric: np.ndarray
    E_closed_form: np.ndarray
    E_bloch: np.ndarray
    omega_fit: Optional[float]
    omega_analytic: float
    max_rel_dev_closed_form: float
    max_rel_dev_bloch: float

    scale: float = 1.0

    def rows(self):
        scale = self.scale
        for t, en, ec, eb in zip(self.times, self.E_numeric, self.E_closed_form, self.E_bloch):
            yield (t, en, ec, eb, abs(en - ec), abs(en - ec) / scale,
                   abs(en - eb), abs(en - eb) / scale)

    def summary(self) -> dict:
        return {
            "omega_fit": self.omega_fit,
            "omega_analytic": self.omega_analytic,
            "max_rel_dev_closed_form": self.max_rel_dev_closed_form,
            "max_rel_dev_bloch": self.max_rel_dev_bloch,
        }


def run_oracle_report(p: SimulationParams) -> OracleReport:
    """Full numeric single-atom energy next to the closed form and the
    rotating-wave Bloch integration.  Deviations are relative to omega0."""
    if p.n_atoms != 1:
        raise ValueError("oracle report is defined for a single atom (n_atoms = 1)")
    traj = integrate(p, keep_states=False)
    times = traj.times
    E_num = traj.column("E")
    alpha = 2 * traj.records[0].E / p.omega0
    A = rabi_amplitude(p)
    E_cf = 0.5 * p.omega0 * sigma_z_closed_form(times, A, p.gamma, p.nbar, alpha)
    spacing = times[1] - times[0]
    sub = max(1, math.ceil(spacing / 0.01))
    bloch = integrate_bloch(p, alpha, t_max=times[-1], dt=spacing / sub, record_every=spacing)
    bt = np.array([b.tau for b in bloch])
    bz = np.array([b.sz for b in bloch])
    E_bl = 0.5 * p.omega0 * (bz if bt.size == times.size else np.interp(times, bt, bz))
    omega_analytic = rabi_frequency(A, p.gamma, p.nbar).value
    try:
        omega_fit = fit_oscillation_frequency(times, E_num, p.period) if A > 0 else None
    except ValueError:
        omega_fit = None
    scale = p.omega0
    return OracleReport(
        times, E_num, E_cf, E_bl, omega_fit, omega_analytic,
        float(np.max(np.abs(E_num - E_cf)) / scale),
        float(np.max(np.abs(E_num - E_bl)) / scale),
        scale,
    )


def write_oracle_report(report: OracleReport, path: Path, config: Optional[RunConfig] = None) -> Path:
    return write_table(path, ORACLE_COLUMNS, report.rows(), config, report.summary())


def hp_horizon(p: SimulationParams) -> float:
    """Window in which the bosonized model is expected to track the Dicke one."""
    rate = p.gamma * p.n_atoms * p.chi
    return p.t_max if rate == 0 else min(p.t_max, 0.5 / rate)


def hp_comparison(p: SimulationParams, truncation: int):
    """Dicke and Holstein-Primakoff Delta E on the common window.

    Returns ``(times, dicke, hp)``; a truncation overflow propagates as
    :class:`~dicke_battery.lindblad.TruncationError`.
    """
    q = p.with_(t_max=hp_horizon(p))
    d = integrate(q, keep_states=False)
    h = integrate_hp(q, truncation, keep_states=False)
    return d.times, d.column("deltaE"), h.column("deltaE")


def write_hp_comparison(p: SimulationParams, truncation: int, path: Path,
                        config: Optional[RunConfig] = None) -> Path:
    times, dk, hp = hp_comparison(p, truncation)
    scale = p.n_atoms * p.omega0
    dev = np.abs(dk - hp)
    rows = zip(times, dk, hp, dev, dev / scale)
    summary = {"max_rel_dev": float(np.max(dev) / scale), "truncation": truncation}
    return write_table(path, HP_COLUMNS, rows, config, summary)


def write_parallel_comparison(c: ParallelComparison, path: Path,
                              config: Optional[RunConfig] = None) -> Path:
    row = (c.n_atoms, c.collective_deltaF, c.parallel_deltaF, c.collective_deltaS,
           c.parallel_deltaS, c.collective_deltaF > c.parallel_deltaF)
    return write_table(path, PARALLEL_COLUMNS, [row], config)


__all__ = [
    "OracleReport", "format_cell", "hp_comparison", "hp_horizon", "metadata_path",
    "run_oracle_report", "write_hp_comparison", "write_oracle_report",
    "write_parallel_comparison", "write_sweep", "write_table", "write_trajectory",
]
