"""Steady-state sweeps over battery size and the search for the optimal
collective unit."""

from __future__ import annotations

import itertools
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .lindblad import SteadyStateResult, detect_steady_state, integrate
from .params import SimulationParams

logger = logging.getLogger(__name__)

OBJECTIVES = ("deltaF", "deltaF_per_atom")

Combo = tuple  # (gamma, amplitude, nbar)


@dataclass(frozen=True)
class SweepSpec:
    base: SimulationParams
    n_min: int
    n_max: int
    gamma_values: Optional[Sequence[float]] = None
    amplitude_values: Optional[Sequence[float]] = None
    nbar_values: Optional[Sequence[float]] = None
    objective: str = "deltaF"

    def __post_init__(self):
        if self.n_min < 1 or self.n_max < self.n_min:
            raise ValueError(f"empty or invalid N range [{self.n_min}, {self.n_max}]")
        for name in ("gamma_values", "amplitude_values", "nbar_values"):
            vals = getattr(self, name)
            if vals is not None and (len(vals) == 0 or min(vals) < 0):
                raise ValueError(f"{name} must be a non-empty list of non-negative values")
        if self.objective not in OBJECTIVES:
            raise ValueError(f"objective must be one of {OBJECTIVES}")

    @property
    def n_range(self) -> range:
        return range(self.n_min, self.n_max + 1)

    def combos(self) -> list[Combo]:
        gammas = self.gamma_values or [self.base.gamma]
        amps = self.amplitude_values or [self.base.amplitude]
        nbars = self.nbar_values or [self.base.nbar]
        return [tuple(float(x) for x in c) for c in itertools.product(gammas, amps, nbars)]

    def points(self) -> list[tuple[int, float, float, float]]:
        return [(n, *c) for c in self.combos() for n in self.n_range]


@dataclass(frozen=True)
class SweepEntry:
    n_atoms: int
    gamma: float
    amplitude: float
    nbar: float
    result: Optional[SteadyStateResult]
    t_max_used: float
    error: Optional[str] = None

    @property
    def combo(self) -> Combo:
        return (self.gamma, self.amplitude, self.nbar)

    @property
    def key(self) -> tuple:
        return (self.n_atoms, *self.combo)


@dataclass
class SweepResult:
    entries: list[SweepEntry]
    objective: str = "deltaF"
    n_opt: dict = field(default_factory=dict)
    objective_value_at_opt: dict = field(default_factory=dict)
    flags: dict = field(default_factory=dict)

    def for_combo(self, combo: Combo) -> list[SweepEntry]:
        return [e for e in self.entries if e.combo == combo]

    def combos(self) -> list[Combo]:
        seen = []
        for e in self.entries:
            if e.combo not in seen:
                seen.append(e.combo)
        return seen


def objective_value(entry: SweepEntry, objective: str, closed_system: bool = False) -> float:
    r = entry.result
    value = r.deltaF_mean if closed_system else r.deltaF_ss
    if objective == "deltaF_per_atom":
        value /= entry.n_atoms
    return value


def find_optimal_n(result: SweepResult, combo: Combo, objective: Optional[str] = None) -> int:
    """Battery size maximizing the objective for one parameter combination.

    Only converged entries count.  Without dissipation there is no steady
    state, so the run-averaged free energy is used instead.  Ties go to the
    smaller N.
    """
    objective = objective or result.objective
    entries = [e for e in result.for_combo(combo) if e.result is not None]
    closed = combo[0] == 0
    if not closed:
        entries = [e for e in entries if e.result.converged]
    if not entries:
        raise ValueError(f"no converged entries for gamma, A, nbar = {combo}")
    best = None
    for e in sorted(entries, key=lambda e: e.n_atoms):
        v = objective_value(e, objective, closed)
        if best is None or v > best[1]:
            best = (e.n_atoms, v)
    return best[0]


def _run_point(args) -> SweepEntry:
    base, n, gamma, amp, nbar = args
    p = base.with_(n_atoms=n, gamma=gamma, amplitude=amp, nbar=nbar)
    try:
        result = _steady(p)
        if not result.converged and gamma > 0:
            p = p.with_(t_max=2 * p.t_max)
            result = _steady(p)
        return SweepEntry(n, gamma, amp, nbar, result, p.t_max)
    except Exception as exc:  # attached to the grid point, not fatal
        return SweepEntry(n, gamma, amp, nbar, None, p.t_max, f"{type(exc).__name__}: {exc}")


def _steady(p: SimulationParams) -> SteadyStateResult:
    traj = integrate(p, keep_states=False, until_steady=p.gamma > 0)
    return detect_steady_state(traj, p)


def _unimodal(values: np.ndarray, tol: float) -> bool:
    d = np.diff(values)
    d = d[np.abs(d) > tol]
    return int(np.sum(np.diff(np.sign(d)) != 0)) <= 1


def run_sweep(spec: SweepSpec, workers: Optional[int] = None) -> SweepResult:
    """Run every grid point and locate the optimum for each combination.

    Points run in parallel processes when ``workers`` > 1; entries are
    ordered by (combination, N) so the result does not depend on scheduling.
    """
    tasks = [(spec.base, *pt) for pt in spec.points()]
    workers = workers if workers is not None else min(len(tasks), os.cpu_count() or 1)
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            entries = list(pool.map(_run_point, tasks))
    else:
        entries = [_run_point(t) for t in tasks]
    order = {c: i for i, c in enumerate(spec.combos())}
    entries.sort(key=lambda e: (order[e.combo], e.n_atoms))

    result = SweepResult(entries=entries, objective=spec.objective)
    for combo in spec.combos():
        for e in result.for_combo(combo):
            if e.error:
                logger.warning("grid point %s failed: %s", e.key, e.error)
        try:
            n_opt = find_optimal_n(result, combo)
        except ValueError as exc:
            result.flags.setdefault(combo, []).append(str(exc))
            continue
        closed = combo[0] == 0
        entry = next(e for e in result.for_combo(combo) if e.n_atoms == n_opt)
        result.n_opt[combo] = n_opt
        result.objective_value_at_opt[combo] = objective_value(entry, spec.objective, closed)
        if not closed:
            ok = [e for e in result.for_combo(combo) if e.result is not None and e.result.converged]
            vals = np.array([objective_value(e, spec.objective) for e in ok])
            if len(vals) > 2 and not _unimodal(vals, spec.base.ss_tolerance * spec.base.omega0):
                result.flags.setdefault(combo, []).append("objective is not unimodal in N")
    return result


@dataclass(frozen=True)
class ParallelComparison:
    n_atoms: int
    collective_deltaF: float
    parallel_deltaF: float
    collective_deltaS: float
    parallel_deltaS: float
    collective: SteadyStateResult
    single: SteadyStateResult


def parallel_comparison(n_atoms: int, base: SimulationParams) -> ParallelComparison:
    """Steady stored free energy and entropy of one collective N-atom unit
    versus N independently charged atoms."""
    if n_atoms < 1:
        raise ValueError("n_atoms must be positive")
    single = _run_point((base, 1, base.gamma, base.amplitude, base.nbar))
    collective = single if n_atoms == 1 else _run_point(
        (base, n_atoms, base.gamma, base.amplitude, base.nbar)
    )
    for e in (single, collective):
        if e.error:
            raise RuntimeError(f"N={e.n_atoms}: {e.error}")
    s, c = single.result, collective.result
    return ParallelComparison(
        n_atoms=n_atoms,
        collective_deltaF=c.deltaF_ss,
        parallel_deltaF=n_atoms * s.deltaF_ss,
        collective_deltaS=c.deltaS_ss,
        parallel_deltaS=n_atoms * s.deltaS_ss,
        collective=c,
        single=s,
    )
