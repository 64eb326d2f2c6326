"""Fixed-step RK4 integration of the collective master equation, with the
thermodynamic ledger carried along at full step resolution."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .linalg import ComplexMatrix, as_matrix, dagger, hermiticity_error
from . import _kernels
from .liouvillian import BandedLiouvillian
from .operators import (
    BosonOperators,
    CollectiveOperators,
    boson_thermal_state,
    build_boson,
    build_collective,
    gibbs_state,
)
from .params import SimulationParams
from .thermo import ThermoRecord, efficiency, entropy_from_eigenvalues, free_energy

TRACE_TOL = 1e-8
HERMITIAN_TOL = 1e-10
TRUNCATION_TOL = 1e-8
MIN_PERIODS = 3
# qualifying period-to-period differences needed before calling a run steady
CONFIRM_DIFFS = 3
EARLY_STOP_DIFFS = 6


class NumericalError(RuntimeError):
    """Integrator breach: trace drift or loss of positivity."""


class TruncationError(NumericalError):
    pass


class TruncationWarning(RuntimeWarning):
    pass


@dataclass
class Trajectory:
    times: np.ndarray
    records: list[ThermoRecord]
    trace_errors: np.ndarray
    min_eigenvalues: np.ndarray
    hermiticity_errors: np.ndarray
    final_state: ComplexMatrix
    states: list[ComplexMatrix] = field(default_factory=list)
    params: Optional[SimulationParams] = None
    temperature: float = 0.0
    completed: bool = True  # False when stopped early at a detected steady state

    def column(self, name: str) -> np.ndarray:
        if name == "eta":
            return np.array([np.nan if r.eta is None else r.eta for r in self.records])
        return np.array([getattr(r, name) for r in self.records], dtype=float)

    def __len__(self) -> int:
        return len(self.records)


@dataclass(frozen=True)
class SteadyStateResult:
    n_atoms: int
    deltaF_ss: float
    deltaS_ss: float
    deltaE_ss: float
    t_steady: float
    converged: bool
    # mean of all complete-period averages; the useful summary when undamped
    deltaF_mean: float = math.nan
    eta_final: Optional[float] = None


def rk4_step(
    rho: ComplexMatrix,
    t: float,
    dt: float,
    rhs: Callable[[ComplexMatrix, float], ComplexMatrix],
    restore: bool = True,
) -> ComplexMatrix:
    """One classical RK4 step followed by re-Hermitization and a guarded
    trace renormalization (skipped with ``restore=False``, for generic ODEs)."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    k1 = rhs(rho, t)
    k2 = rhs(rho + 0.5 * dt * k1, t + 0.5 * dt)
    k3 = rhs(rho + 0.5 * dt * k2, t + 0.5 * dt)
    k4 = rhs(rho + dt * k3, t + dt)
    out = rho + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
    return _restore(out)[0] if restore else out


def _restore(rho: ComplexMatrix) -> tuple[ComplexMatrix, float]:
    rho = 0.5 * (rho + dagger(rho))
    tr = float(np.trace(rho).real)
    drift = abs(tr - 1.0)
    if drift >= TRACE_TOL:
        raise NumericalError(f"trace drifted by {drift:.3e} in one step; reduce dt")
    return rho / tr, drift


def validate_density_matrix(rho: ComplexMatrix, positivity_tolerance: float) -> ComplexMatrix:
    rho = as_matrix(rho)
    if abs(np.trace(rho).real - 1) > TRACE_TOL:
        raise ValueError("initial state must have unit trace")
    if hermiticity_error(rho) > HERMITIAN_TOL:
        raise ValueError("initial state must be Hermitian")
    if np.linalg.eigvalsh(rho).min() < -positivity_tolerance:
        raise ValueError("initial state must be positive semidefinite")
    return rho.copy()


class _Recorder:
    def __init__(self, kernel: BandedLiouvillian, p: SimulationParams, keep_states: bool):
        self.kernel = kernel
        self.p = p
        self.temperature = p.temperature
        self.keep_states = keep_states
        self.eps_w = 1e-9 * p.omega0
        self.times: list[float] = []
        self.records: list[ThermoRecord] = []
        self.trace_errors: list[float] = []
        self.min_eigs: list[float] = []
        self.herm_errors: list[float] = []
        self.states: list[ComplexMatrix] = []

    def __call__(self, rho, t, W, Q, drift):
        k = self.kernel
        lam = np.linalg.eigvalsh(rho)
        if lam[0] < -self.p.positivity_tolerance:
            raise NumericalError(
                f"positivity lost at t={t:.6g} (eigenvalue {lam[0]:.3e}); "
                "near-pure states need a smaller dt"
            )
        E = k.bare_energy(rho)
        S = entropy_from_eigenvalues(lam)
        F = free_energy(E, S, self.temperature)
        H = E + k.field(t) * k.x_expectation(rho)
        if not self.records:
            self.E0, self.S0, self.F0, self.H0 = E, S, F, H
        dF = F - self.F0
        rec = ThermoRecord(
            t=t, E=E, S=S, F=F,
            deltaF=dF, deltaE=E - self.E0, deltaS=S - self.S0,
            W=W, Q=Q, H_total=H,
            eta=efficiency(dF, W, self.eps_w),
            first_law_residual=W - Q - (H - self.H0),
        )
        self.times.append(t)
        self.records.append(rec)
        self.trace_errors.append(drift)
        self.min_eigs.append(float(lam[0]))
        self.herm_errors.append(hermiticity_error(rho))
        if self.keep_states:
            self.states.append(rho.copy())

    def build(self, final_state, completed) -> Trajectory:
        return Trajectory(
            times=np.array(self.times),
            records=self.records,
            trace_errors=np.array(self.trace_errors),
            min_eigenvalues=np.array(self.min_eigs),
            hermiticity_errors=np.array(self.herm_errors),
            final_state=final_state,
            states=self.states,
            params=self.p,
            temperature=self.temperature,
            completed=completed,
        )


def _evolve(
    kernel: BandedLiouvillian,
    p: SimulationParams,
    rho0: ComplexMatrix,
    keep_states: bool,
    until_steady: bool,
    watch_truncation: bool = False,
) -> Trajectory:
    """Run the compiled RK4 loop between record points and log each record.

    Work and heat accumulate inside the loop with the RK4 stage weights, so
    they see every step regardless of ``record_stride``.
    """
    dt = p.time_step
    n_steps = p.n_steps
    stride = p.record_stride
    rec = _Recorder(kernel, p, keep_states)
    steps_per_period = p.period / dt
    check_every = max(stride, int(round(10 * steps_per_period)))
    args = (
        dt, kernel.energies, kernel.ladder, kernel.drive_strength, kernel.omega,
        kernel.g_down, kernel.g_up, np.ascontiguousarray(kernel._decay),
    )

    rho = np.ascontiguousarray(rho0, dtype=complex)
    W = Q = 0.0
    rec(rho, 0.0, W, Q, abs(np.trace(rho).real - 1))
    completed = True
    step = 0
    next_check = check_every
    while step < n_steps:
        chunk = min(stride - step % stride, n_steps - step)
        rho, W, Q, drift, status, done = _kernels.advance(
            rho, W, Q, step + 1, chunk, *args, TRACE_TOL, watch_truncation, TRUNCATION_TOL,
        )
        step += done
        t = step * dt
        if status == _kernels.STATUS_TRACE:
            raise NumericalError(
                f"trace drifted by {drift:.3e} in one step at t={t + dt:.6g}; reduce dt"
            )
        if status == _kernels.STATUS_TRUNCATION:
            raise TruncationError(f"Fock truncation M={rho.shape[0]} overflowed at t={t:.6g}")
        rec(rho, t, W, Q, drift)
        if until_steady and step >= next_check and step < n_steps:
            next_check += check_every
            times = np.array(rec.times)
            if times[-1] >= MIN_PERIODS * p.period:
                values = np.array([r.deltaF for r in rec.records])
                _, avgs = period_averages(times, values, p.period)
                if _qualifying_tail(avgs, p.ss_tolerance * p.omega0) >= EARLY_STOP_DIFFS:
                    completed = False
                    break
    return rec.build(rho, completed)


def integrate(
    p: SimulationParams,
    ops: Optional[CollectiveOperators] = None,
    rho0: Optional[ComplexMatrix] = None,
    *,
    keep_states: bool = True,
    until_steady: bool = False,
) -> Trajectory:
    """Integrate the Dicke-sector master equation from t = 0 to ``p.t_max``.

    ``rho0`` defaults to the Gibbs state at the bath temperature.  With
    ``until_steady`` the run stops once the drive-period averaged free
    energy has settled (see :func:`detect_steady_state`).
    """
    if ops is None:
        ops = build_collective(p.n_atoms)
    if ops.n_atoms != p.n_atoms:
        raise ValueError("operators were built for a different n_atoms")
    if rho0 is None:
        rho0 = gibbs_state(ops, p.omega0, p.temperature)
    rho0 = validate_density_matrix(rho0, p.positivity_tolerance)
    if rho0.shape != (ops.dim, ops.dim):
        raise ValueError(f"initial state must be {ops.dim}x{ops.dim}")
    kernel = BandedLiouvillian.for_dicke(ops, p)
    return _evolve(kernel, p, rho0, keep_states, until_steady)


def integrate_hp(
    p: SimulationParams,
    truncation: int,
    rho0: Optional[ComplexMatrix] = None,
    *,
    keep_states: bool = True,
    on_truncation: str = "raise",
) -> Trajectory:
    """Integrate the Holstein-Primakoff bosonized master equation on Fock
    states ``0..truncation-1``.

    The top two Fock populations are watched at every step; exceeding
    1e-8 raises :class:`TruncationError` (or warns, with
    ``on_truncation="warn"``).
    """
    if on_truncation not in ("raise", "warn"):
        raise ValueError("on_truncation must be 'raise' or 'warn'")
    bos: BosonOperators = build_boson(truncation)
    if rho0 is None:
        rho0 = boson_thermal_state(bos, p.omega0, p.temperature)
    rho0 = validate_density_matrix(rho0, p.positivity_tolerance)
    if rho0.shape != (bos.dim, bos.dim):
        raise ValueError(f"initial state must be {bos.dim}x{bos.dim}")
    kernel = BandedLiouvillian.for_boson(bos, p)
    try:
        top = rho0[-1, -1].real + rho0[-2, -2].real
        if top > TRUNCATION_TOL:
            raise TruncationError(f"initial state overflows Fock truncation M={truncation}")
        return _evolve(kernel, p, rho0, keep_states, False, watch_truncation=True)
    except TruncationError as exc:
        if on_truncation == "raise":
            raise
        warnings.warn(str(exc), TruncationWarning, stacklevel=2)
        return _evolve(kernel, p, rho0, keep_states, False)


def period_averages(times: np.ndarray, values: np.ndarray, period: float):
    """Average ``values`` over consecutive complete windows ``[k P, (k+1) P)``.

    Returns ``(window_end_times, averages)``.
    """
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    idx = np.floor(times / period + 1e-9).astype(int)
    n_complete = int(np.floor(times[-1] / period + 1e-9))
    ends, avgs = [], []
    for k in range(n_complete):
        sel = idx == k
        if sel.any():
            ends.append((k + 1) * period)
            avgs.append(values[sel].mean())
    return np.array(ends), np.array(avgs)


def _qualifying_tail(avgs: np.ndarray, tol: float) -> int:
    """Number of trailing consecutive differences below ``tol``."""
    diffs = np.abs(np.diff(avgs))
    count = 0
    for d in diffs[::-1]:
        if d >= tol:
            break
        count += 1
    return count


def detect_steady_state(traj: Trajectory, p: SimulationParams) -> SteadyStateResult:
    """Locate the driven steady state from drive-period averages of Delta F.

    The run is steady once consecutive period averages differ by less than
    ``ss_tolerance * omega0`` for every remaining period (at least
    ``CONFIRM_DIFFS`` of them).  ``t_steady`` is the end of the first period
    of that tail.  Reported values are the final period averages either way.
    """
    period = p.period
    if traj.times[-1] < MIN_PERIODS * period * (1 - 1e-9):
        raise ValueError(f"trajectory spans fewer than {MIN_PERIODS} drive periods")
    ends, f_avg = period_averages(traj.times, traj.column("deltaF"), period)
    _, s_avg = period_averages(traj.times, traj.column("deltaS"), period)
    _, e_avg = period_averages(traj.times, traj.column("deltaE"), period)
    tail = _qualifying_tail(f_avg, p.ss_tolerance * p.omega0)
    converged = tail >= CONFIRM_DIFFS
    t_steady = float(ends[len(f_avg) - tail]) if converged else float(traj.times[-1])
    return SteadyStateResult(
        n_atoms=p.n_atoms,
        deltaF_ss=float(f_avg[-1]),
        deltaS_ss=float(s_avg[-1]),
        deltaE_ss=float(e_avg[-1]),
        t_steady=t_steady,
        converged=converged,
        deltaF_mean=float(f_avg.mean()),
        eta_final=traj.records[-1].eta,
    )
