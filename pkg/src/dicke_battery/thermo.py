"""Thermodynamic bookkeeping for the charging process.

Sign conventions: ``W`` is work done on the battery by the drive, ``Q`` is
heat delivered to the bath, and ``<H>`` includes the drive term, so that
``W = Q + Delta<H>`` along any trajectory.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .linalg import ComplexMatrix, LinalgError, expectation, hermitian_eigvals
from .liouvillian import dissipator, drive_field, hamiltonian
from .operators import CollectiveOperators
from .params import SimulationParams

ZERO_CLAMP = 1e-10
NEGATIVE_EIGEN_TOL = 1e-8
EFFICIENCY_EPS = 1e-9


class StateError(LinalgError):
    pass


@dataclass(frozen=True)
class ThermoRecord:
    t: float
    E: float
    S: float
    F: float
    deltaF: float
    deltaE: float
    deltaS: float
    W: float
    Q: float
    H_total: float
    eta: Optional[float]
    first_law_residual: float


def internal_energy(rho: ComplexMatrix, ops: CollectiveOperators, omega0: float) -> float:
    return omega0 * expectation(ops.jz, rho)


def entropy_from_eigenvalues(lam: np.ndarray) -> float:
    lam = np.asarray(lam, dtype=float)
    if lam.min() < -NEGATIVE_EIGEN_TOL:
        raise StateError(f"state is not positive (eigenvalue {lam.min():.3e})")
    lam = lam[lam > ZERO_CLAMP]
    return float(-np.sum(lam * np.log(lam)))


def von_neumann_entropy(rho: ComplexMatrix) -> float:
    """``-Tr(rho ln rho)`` in nats; eigenvalues below 1e-10 count as zero."""
    return entropy_from_eigenvalues(hermitian_eigvals(rho))


def free_energy(E: float, S: float, temperature: float) -> float:
    if temperature < 0:
        raise ValueError("temperature must be non-negative")
    if temperature == 0:
        return E
    return E - temperature * S


def total_energy(
    rho: ComplexMatrix, ops: CollectiveOperators, p: SimulationParams, t: float
) -> float:
    """``Tr(H(t) rho)``, the bare energy plus the instantaneous drive term."""
    return internal_energy(rho, ops, p.omega0) + drive_field(p, t) * expectation(ops.jx, rho)


def work_rate(rho: ComplexMatrix, t: float, p: SimulationParams, ops: CollectiveOperators) -> float:
    """Power ``Tr(rho dH/dt)`` injected by the drive."""
    return -p.drive_strength * p.omega * math.sin(p.omega * t) * expectation(ops.jx, rho)


def heat_rate(rho: ComplexMatrix, t: float, p: SimulationParams, ops: CollectiveOperators) -> float:
    """Heat current into the bath, ``-Tr(D[rho] H(t))``."""
    if p.gamma == 0:
        return 0.0
    return -expectation(hamiltonian(ops, p, t), dissipator(rho, ops, p))


# RK4 weights reproduce the integrator's own quadrature of dW/dt and dQ/dt,
# keeping W - Q - Delta<H> at the integrator's order.
RK4_WEIGHTS = (1 / 6, 1 / 3, 1 / 3, 1 / 6)


def _stage_increment(rate, stages, dt, p, ops) -> float:
    if len(stages) != 4:
        raise ValueError("expected the four RK4 stages (t_i, rho_i)")
    return dt * sum(w * rate(r, t, p, ops) for w, (t, r) in zip(RK4_WEIGHTS, stages))


def accumulate_work(
    stages: Sequence[tuple[float, ComplexMatrix]], dt: float, p: SimulationParams,
    ops: CollectiveOperators,
) -> float:
    """Work done during one integrator step, from its four RK4 stages."""
    if p.amplitude == 0:
        return 0.0
    return _stage_increment(work_rate, stages, dt, p, ops)


def accumulate_heat(
    stages: Sequence[tuple[float, ComplexMatrix]], dt: float, p: SimulationParams,
    ops: CollectiveOperators,
) -> float:
    if p.gamma == 0:
        return 0.0
    return _stage_increment(heat_rate, stages, dt, p, ops)


def efficiency(deltaF: float, W: float, eps: float = EFFICIENCY_EPS) -> Optional[float]:
    """``deltaF / W``; ``None`` while the work is still below ``eps``."""
    if abs(W) <= eps:
        return None
    return deltaF / W
