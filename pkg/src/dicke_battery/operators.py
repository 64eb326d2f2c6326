"""Collective spin operators in the symmetric Dicke sector, bosonic ladder
operators, and thermal initial states."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .linalg import ComplexMatrix, dagger


@dataclass(frozen=True)
class CollectiveOperators:
    """J_x, J_y, J_z, J_+, J_- for N spins-1/2 in the J = N/2 sector.

    Basis index ``l = 0..N`` labels the Dicke state with ``m = l - N/2``,
    so index 0 is the collective ground state.
    """

    n_atoms: int
    jx: ComplexMatrix
    jy: ComplexMatrix
    jz: ComplexMatrix
    jplus: ComplexMatrix
    jminus: ComplexMatrix
    jpjm: ComplexMatrix
    jmjp: ComplexMatrix
    # ladder coefficients: jplus[l+1, l] == ladder[l]
    ladder: np.ndarray = field(repr=False)

    @property
    def dim(self) -> int:
        return self.n_atoms + 1

    @property
    def m_values(self) -> np.ndarray:
        return np.arange(self.dim) - self.n_atoms / 2


def dicke_ladder(n_atoms: int) -> np.ndarray:
    j = n_atoms / 2
    m = np.arange(n_atoms) - j
    return np.sqrt((j - m) * (j + m + 1))


def build_collective(n_atoms: int) -> CollectiveOperators:
    if int(n_atoms) != n_atoms or n_atoms < 1:
        raise ValueError(f"n_atoms must be a positive integer, got {n_atoms!r}")
    n_atoms = int(n_atoms)
    dim = n_atoms + 1
    ladder = dicke_ladder(n_atoms)
    jplus = np.zeros((dim, dim), dtype=complex)
    jplus[np.arange(1, dim), np.arange(n_atoms)] = ladder
    jminus = dagger(jplus).copy()
    jz = np.diag(np.arange(dim) - n_atoms / 2).astype(complex)
    jx = 0.5 * (jplus + jminus)
    jy = (jplus - jminus) / 2j
    for m in (jplus, jminus, jz, jx, jy):
        m.setflags(write=False)
    jpjm = jplus @ jminus
    jmjp = jminus @ jplus
    jpjm.setflags(write=False)
    jmjp.setflags(write=False)
    ladder.setflags(write=False)
    return CollectiveOperators(n_atoms, jx, jy, jz, jplus, jminus, jpjm, jmjp, ladder)


def nbar_to_temperature(nbar: float, omega: float) -> float:
    """Invert the Bose occupation ``nbar = 1/(exp(omega/T) - 1)`` (k_B = 1)."""
    if nbar < 0:
        raise ValueError(f"nbar must be non-negative, got {nbar}")
    if nbar == 0:
        return 0.0
    return omega / math.log1p(1.0 / nbar)


def bose_occupation(temperature: float, omega: float) -> float:
    if temperature == 0:
        return 0.0
    return 1.0 / math.expm1(omega / temperature)


def _boltzmann_populations(levels: np.ndarray, temperature: float) -> np.ndarray:
    """Normalized Boltzmann weights; ``levels`` are energies above the lowest."""
    p = np.zeros(levels.shape)
    if temperature == 0:
        p[0] = 1.0
        return p
    if math.isinf(temperature):
        return np.full(levels.shape, 1.0 / levels.size)
    with np.errstate(over="ignore"):  # far-excited levels at tiny T weigh exactly 0
        p = np.exp(-levels / temperature)
    return p / p.sum()


def gibbs_state(ops: CollectiveOperators, omega0: float, temperature: float) -> ComplexMatrix:
    """Thermal state of ``omega0 * J_z`` restricted to the Dicke sector."""
    if omega0 <= 0:
        raise ValueError("omega0 must be positive")
    if temperature < 0:
        raise ValueError("temperature must be non-negative")
    p = _boltzmann_populations(omega0 * np.arange(ops.dim, dtype=float), temperature)
    return np.diag(p).astype(complex)


@dataclass(frozen=True)
class BosonOperators:
    """Truncated single-mode ladder operators on Fock states ``0..M-1``."""

    truncation_dim: int
    b: ComplexMatrix
    bdag: ComplexMatrix
    number: ComplexMatrix

    @property
    def dim(self) -> int:
        return self.truncation_dim


def build_boson(truncation_dim: int) -> BosonOperators:
    if int(truncation_dim) != truncation_dim or truncation_dim < 2:
        raise ValueError(f"truncation dimension must be an integer >= 2, got {truncation_dim!r}")
    m = int(truncation_dim)
    bdag = np.zeros((m, m), dtype=complex)
    bdag[np.arange(1, m), np.arange(m - 1)] = np.sqrt(np.arange(1, m))
    b = dagger(bdag).copy()
    number = bdag @ b
    for x in (b, bdag, number):
        x.setflags(write=False)
    return BosonOperators(m, b, bdag, number)


def boson_thermal_state(bos: BosonOperators, omega0: float, temperature: float) -> ComplexMatrix:
    """Thermal state of ``omega0 * b^dagger b`` renormalized on the truncated space."""
    p = _boltzmann_populations(omega0 * np.arange(bos.dim, dtype=float), temperature)
    return np.diag(p).astype(complex)
