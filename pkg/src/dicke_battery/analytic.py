"""Single-atom oracles: resonant rotating-wave Bloch equations, their closed
form, and helpers to read oscillation frequency and decay off a signal.

The amplitude ``A`` in this module is the Rabi drive amplitude, i.e. the
rotating-frame Hamiltonian is ``(A/2) sigma_x``.  For a simulation this is
``params.drive_strength / 2`` (see :func:`rabi_amplitude`), which equals the
simulation amplitude under the default ``"pauli"`` drive convention.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.optimize import curve_fit
from scipy.signal import find_peaks

from .params import SimulationParams


class OutOfRegimeError(ValueError):
    """Formula evaluated outside the regime it was derived for."""


def chi(nbar: float) -> float:
    return 1.0 + 2.0 * nbar


def rabi_amplitude(p: SimulationParams) -> float:
    return p.drive_strength / 2.0


@dataclass(frozen=True)
class RabiFrequency:
    value: float  # |Omega|
    overdamped: bool

    def __float__(self) -> float:
        return self.value


def rabi_frequency(A: float, gamma: float, nbar: float) -> RabiFrequency:
    """Damped Rabi frequency ``sqrt(A^2 - gamma^2 chi^2 / 4)``.

    A negative radicand is reported as ``overdamped`` with the magnitude of
    the imaginary root.
    """
    rad = A * A - (gamma * chi(nbar)) ** 2 / 4.0
    return RabiFrequency(math.sqrt(abs(rad)), rad <= 0)


def sigma_z_steady(A: float, gamma: float, nbar: float) -> float:
    c = chi(nbar)
    den = 2 * gamma**2 * c**2 + A**2
    if den == 0:
        raise OutOfRegimeError("undriven, undamped atom has no steady state")
    return -2 * gamma**2 * c / den


def sigma_z_closed_form(tau, A: float, gamma: float, nbar: float, alpha: float):
    """Closed-form ``<sigma_z>(tau)`` for an atom starting diagonal with
    ``<sigma_z>(0) = alpha``."""
    if A == 0:
        if not -1 <= alpha <= 1:
            raise ValueError("alpha must lie in [-1, 1]")
        tau = np.asarray(tau, dtype=float)
        if gamma == 0:
            return alpha + 0 * tau
        z_ss = -1.0 / chi(nbar)
        return z_ss + (alpha - z_ss) * np.exp(-2 * gamma * chi(nbar) * tau)
    om = rabi_frequency(A, gamma, nbar)
    if om.overdamped:
        raise OutOfRegimeError("closed form requires an underdamped drive (real Omega)")
    if not -1 <= alpha <= 1:
        raise ValueError("alpha must lie in [-1, 1]")
    c = chi(nbar)
    g2 = gamma * gamma
    omega = om.value
    tau = np.asarray(tau, dtype=float)
    den = 2 * g2 * c * c + A * A
    cos_coef = 2 * c * g2 * (1 + alpha * c) + alpha * A * A
    sin_coef = gamma * (2 * g2 * c * c * (1 + alpha * c) + A * A * (4 + alpha * c)) / (2 * omega)
    # z_ss * (1 - e^{-3 g c t / 2} / (2 c g^2) * (...)), with the g^2 cancelled
    decay = np.exp(-1.5 * tau * gamma * c) / den
    return -2 * g2 * c / den + decay * (cos_coef * np.cos(omega * tau) - sin_coef * np.sin(omega * tau))


def energy_zero_temp(tau, A: float, gamma: float, omega0: float):
    """Zero-temperature mean energy of a single atom started in its ground
    state, taken verbatim from its closed form, including its spin-convention steady value."""
    if not A > gamma / 2:
        raise OutOfRegimeError("requires A > gamma/2")
    tau = np.asarray(tau, dtype=float)
    omega = math.sqrt(A * A - gamma * gamma / 4)
    den = 8 * gamma**2 + A * A
    # pref * (1 + A^2 / (8 g^2) * e^{-3 g t / 2} (...)), with the g^2 cancelled
    osc = np.exp(-1.5 * gamma * tau) * (
        np.cos(omega * tau) + 1.5 * gamma / omega * np.sin(omega * tau)
    )
    return -4 * omega0 * gamma**2 / den - omega0 * A * A / (2 * den) * osc


@dataclass(frozen=True)
class BlochState:
    tau: float
    sz: float
    splus_re: float
    splus_im: float


def bloch_rhs(y: np.ndarray, A: float, gamma: float, nbar: float) -> np.ndarray:
    """Resonant RWA Bloch equations for ``y = (sz, Re s+, Im s+)``.

        d sz/dt = i A (s- - s+) - 2 gamma (chi sz + 1)
        d s+/dt = -i (A/2) sz - gamma chi s+,      s- = conj(s+)
    """
    c = chi(nbar)
    sz, sr, si = y
    return np.array([
        2 * A * si - 2 * gamma * (c * sz + 1),
        -gamma * c * sr,
        -0.5 * A * sz - gamma * c * si,
    ])


def integrate_bloch(
    p: SimulationParams,
    alpha: float,
    t_max: Optional[float] = None,
    dt: Optional[float] = None,
    record_every: float = 0.0,
) -> list[BlochState]:
    """RK4 integration of the rotating-wave Bloch equations for ``p``.

    Only defined on resonance, where the rotating-wave reduction holds.
    """
    if not math.isclose(p.omega, p.omega0, rel_tol=1e-12):
        raise OutOfRegimeError("Bloch reduction assumes a resonant drive (omega == omega0)")
    if p.n_atoms != 1:
        raise OutOfRegimeError("Bloch equations describe a single atom")
    A = rabi_amplitude(p)
    gamma, nbar = p.gamma, p.nbar
    t_max = p.t_max if t_max is None else t_max
    if dt is None:
        fastest = max(A, gamma * chi(nbar), 1e-3)
        dt = min(0.01, 0.02 / fastest)
    n = int(math.ceil(t_max / dt - 1e-9))
    dt = t_max / n
    every = max(1, int(round(record_every / dt))) if record_every else 1
    y = np.array([alpha, 0.0, 0.0])
    out = [BlochState(0.0, *y)]
    for k in range(1, n + 1):
        k1 = bloch_rhs(y, A, gamma, nbar)
        k2 = bloch_rhs(y + 0.5 * dt * k1, A, gamma, nbar)
        k3 = bloch_rhs(y + 0.5 * dt * k2, A, gamma, nbar)
        k4 = bloch_rhs(y + dt * k3, A, gamma, nbar)
        y = y + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        if k % every == 0 or k == n:
            out.append(BlochState(k * dt, *y))
    return out


def smooth_over_period(times: np.ndarray, values: np.ndarray, period: float):
    """Centered moving average over one drive period (removes the 2 omega
    ripple of the counter-rotating terms).  Needs uniform sampling."""
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    step = times[1] - times[0]
    w = max(1, int(round(period / step)))
    kernel = np.ones(w) / w
    smooth = np.convolve(values, kernel, mode="valid")
    t_smooth = times[: smooth.size] + (w - 1) * step / 2
    return t_smooth, smooth


def _refine_extremum(t, v, i):
    y0, y1, y2 = v[i - 1], v[i], v[i + 1]
    den = y0 - 2 * y1 + y2
    shift = 0.0 if den == 0 else 0.5 * (y0 - y2) / den
    return t[i] + shift * (t[i + 1] - t[i])


def oscillation_extrema(times, values, period: float, rel_floor: float = 1e-3):
    """Times of alternating extrema of the period-smoothed signal.

    Extrema whose deviation from the final value is below ``rel_floor`` of
    the largest deviation are dropped as noise.
    """
    t, v = smooth_over_period(times, values, period)
    dev = v - v[-1]
    floor = rel_floor * np.max(np.abs(dev))
    peaks, _ = find_peaks(v)
    troughs, _ = find_peaks(-v)
    idx = sorted([i for i in np.concatenate((peaks, troughs)) if abs(dev[i]) > floor])
    return np.array([_refine_extremum(t, v, i) for i in idx])


def fit_oscillation_frequency(times, values, period: float, max_extrema: int = 6) -> float:
    """Angular frequency from the spacing of consecutive extrema.

    For ``c + exp(-k t) cos(W t + phi)`` the extrema are spaced by exactly
    ``pi / W`` whatever the damping, so no envelope model is needed.
    """
    ext = oscillation_extrema(times, values, period)[:max_extrema]
    if ext.size < 2:
        raise ValueError("fewer than two extrema; cannot estimate a frequency")
    return math.pi / float(np.mean(np.diff(ext)))


def fit_damped_oscillation(times, values, period: float):
    """Least-squares fit of ``c + exp(-k t) (a cos W t + b sin W t)`` to the
    period-smoothed signal.  Returns ``(k, W)``; starting values come from
    the extremum spacing and the first two extremum heights."""
    t, v = smooth_over_period(times, values, period)
    ext = oscillation_extrema(times, values, period)
    if ext.size < 2:
        raise ValueError("fewer than two extrema; cannot fit a damped oscillation")
    w0 = math.pi / float(np.mean(np.diff(ext[:6])))
    h = np.abs(np.interp(ext[:2], t, v) - v[-1])
    k0 = max(float(np.log(h[0] / h[1]) / (ext[1] - ext[0])), 1e-6)

    def model(tt, c, k, a, b, w):
        return c + np.exp(-k * tt) * (a * np.cos(w * tt) + b * np.sin(w * tt))

    a0 = v[0] - v[-1]
    lower = (-np.inf, 0.0, -np.inf, -np.inf, 0.0)
    popt, _ = curve_fit(
        model, t, v, p0=(v[-1], k0, a0, 0.0, w0), bounds=(lower, np.inf), maxfev=20000
    )
    return float(popt[1]), abs(float(popt[4]))


def fit_decay_rate(times, values, period: float) -> float:
    """Decay rate of the oscillation envelope (see :func:`fit_damped_oscillation`)."""
    return fit_damped_oscillation(times, values, period)[0]
