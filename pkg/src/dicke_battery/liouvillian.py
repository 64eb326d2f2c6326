"""Right-hand side of the driven collective master equation.

    drho/dt = -i[w0 J_z + f(t) J_x, rho]
              + g (nbar+1) (2 J- rho J+ - {J+ J-, rho})
              + g nbar     (2 J+ rho J- - {J- J+, rho})

with ``f(t) = drive_strength * cos(omega t)``.  Two evaluations are provided:
``liouvillian_rhs`` works with dense operator products, and
``BandedLiouvillian`` exploits the tridiagonal structure of the ladder
operators for the integrator's inner loop.
"""

from __future__ import annotations

import math

import numpy as np

from .linalg import ComplexMatrix, LinalgError, as_matrix
from .operators import BosonOperators, CollectiveOperators
from .params import SimulationParams


def drive_field(p: SimulationParams, t: float) -> float:
    return p.drive_strength * math.cos(p.omega * t)


def hamiltonian(ops: CollectiveOperators, p: SimulationParams, t: float) -> ComplexMatrix:
    return p.omega0 * ops.jz + drive_field(p, t) * ops.jx


def dissipator(rho: ComplexMatrix, ops: CollectiveOperators, p: SimulationParams) -> ComplexMatrix:
    """Dissipative part of the generator, with the factor-2 jump convention."""
    g_down = p.gamma * (p.nbar + 1)
    g_up = p.gamma * p.nbar
    jp, jm = ops.jplus, ops.jminus
    out = g_down * (2 * jm @ rho @ jp - ops.jpjm @ rho - rho @ ops.jpjm)
    if g_up:
        out = out + g_up * (2 * jp @ rho @ jm - ops.jmjp @ rho - rho @ ops.jmjp)
    return out


def liouvillian_rhs(
    rho: ComplexMatrix, t: float, p: SimulationParams, ops: CollectiveOperators
) -> ComplexMatrix:
    rho = as_matrix(rho)
    if rho.shape != (ops.dim, ops.dim):
        raise LinalgError(f"state has shape {rho.shape}, operators have dim {ops.dim}")
    h = hamiltonian(ops, p, t)
    return -1j * (h @ rho - rho @ h) + dissipator(rho, ops, p)


class BandedLiouvillian:
    """Generator for a ladder system with tridiagonal coupling.

    ``energies`` is the diagonal of the bare Hamiltonian, ``ladder[l]`` the
    matrix element of the lowering operator L between levels l+1 and l.  The
    drive couples through ``X = (L + L^dagger)/2``.  Covers both the Dicke
    sector (L = J-) and the bosonized mode (L = sqrt(N) b).
    """

    def __init__(self, energies, ladder, drive_strength, omega, g_down, g_up):
        self.energies = np.asarray(energies, dtype=float)
        self.ladder = np.asarray(ladder, dtype=float)
        self.dim = self.energies.size
        if self.ladder.size != self.dim - 1:
            raise ValueError("ladder must have dim - 1 entries")
        self.drive_strength = float(drive_strength)
        self.omega = float(omega)
        self.g_down = float(g_down)
        self.g_up = float(g_up)

        c = self.ladder
        self._c_col = c[:, None]
        self._ediff = (self.energies[:, None] - self.energies[None, :]).astype(complex)
        d_up = np.concatenate(([0.0], c**2))  # diag of L^dagger L
        d_dn = np.concatenate((c**2, [0.0]))  # diag of L L^dagger
        self._decay = (
            self.g_down * (d_up[:, None] + d_up[None, :])
            + self.g_up * (d_dn[:, None] + d_dn[None, :])
        )
        cc = np.outer(c, c)
        self._feed_down = 2 * self.g_down * cc
        self._feed_up = 2 * self.g_up * cc
        self.dissipative = self.g_down > 0 or self.g_up > 0

    @classmethod
    def for_dicke(cls, ops: CollectiveOperators, p: SimulationParams) -> "BandedLiouvillian":
        return cls(
            p.omega0 * ops.m_values,
            ops.ladder,
            p.drive_strength,
            p.omega,
            p.gamma * (p.nbar + 1),
            p.gamma * p.nbar,
        )

    @classmethod
    def for_boson(cls, bos: BosonOperators, p: SimulationParams) -> "BandedLiouvillian":
        # J_z -> b^dag b - N/2, J- -> sqrt(N) b
        n = p.n_atoms
        return cls(
            p.omega0 * (np.arange(bos.dim) - n / 2),
            np.sqrt(n * np.arange(1, bos.dim)),
            p.drive_strength,
            p.omega,
            p.gamma * (p.nbar + 1),
            p.gamma * p.nbar,
        )

    def field(self, t: float) -> float:
        return self.drive_strength * math.cos(self.omega * t)

    def apply_x(self, rho: ComplexMatrix) -> tuple[ComplexMatrix, ComplexMatrix]:
        """Return ``(X rho, rho X)``."""
        c = self._c_col
        xr = np.zeros_like(rho)
        xr[:-1] += c * rho[1:]
        xr[1:] += c * rho[:-1]
        rx = np.zeros_like(rho)
        rx[:, :-1] += rho[:, 1:] * self.ladder
        rx[:, 1:] += rho[:, :-1] * self.ladder
        return 0.5 * xr, 0.5 * rx

    def dissipator(self, rho: ComplexMatrix) -> ComplexMatrix:
        out = -self._decay * rho
        out[:-1, :-1] += self._feed_down * rho[1:, 1:]
        if self.g_up:
            out[1:, 1:] += self._feed_up * rho[:-1, :-1]
        return out

    def __call__(self, rho: ComplexMatrix, t: float) -> ComplexMatrix:
        return self.split(rho, t)[0]

    def split(self, rho: ComplexMatrix, t: float) -> tuple[ComplexMatrix, ComplexMatrix]:
        """Full generator and its dissipative part."""
        xr, rx = self.apply_x(rho)
        comm = self._ediff * rho + self.field(t) * (xr - rx)
        if not self.dissipative:
            return -1j * comm, np.zeros_like(rho)
        d = self.dissipator(rho)
        return -1j * comm + d, d

    def bare_energy(self, rho: ComplexMatrix) -> float:
        return float(np.dot(self.energies, np.diagonal(rho).real))

    def x_expectation(self, rho: ComplexMatrix) -> float:
        upper = np.diagonal(rho, 1)
        lower = np.diagonal(rho, -1)
        return float(0.5 * np.dot(self.ladder, (upper + lower).real))

    def energy_flux(self, d: ComplexMatrix, t: float) -> float:
        """``Tr(d H(t))`` for a Hermitian generator output ``d``."""
        return self.bare_energy(d) + self.field(t) * self.x_expectation(d)
