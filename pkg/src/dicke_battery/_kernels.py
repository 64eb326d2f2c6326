"""Compiled inner loop for the banded RK4 integrator.

Mirrors :class:`dicke_battery.liouvillian.BandedLiouvillian` element by
element; the pure-numpy class remains the reference implementation.
"""

import math

import numpy as np
from numba import njit

STATUS_OK = 0
STATUS_TRACE = 1
STATUS_TRUNCATION = 2


@njit(cache=True)
def _rhs(rho, t, energies, ladder, drive, omega, g_down, g_up, decay, out):
    """Write the generator into ``out``; return ``Tr(D[rho] H(t))``."""
    n = rho.shape[0]
    f = drive * math.cos(omega * t)
    flux = 0.0
    for i in range(n):
        for j in range(n):
            r = rho[i, j]
            xr = 0j
            if i < n - 1:
                xr += ladder[i] * rho[i + 1, j]
            if i > 0:
                xr += ladder[i - 1] * rho[i - 1, j]
            rx = 0j
            if j < n - 1:
                rx += rho[i, j + 1] * ladder[j]
            if j > 0:
                rx += rho[i, j - 1] * ladder[j - 1]
            comm = (energies[i] - energies[j]) * r + 0.5 * f * (xr - rx)
            d = -decay[i, j] * r
            if i < n - 1 and j < n - 1:
                d += 2.0 * g_down * ladder[i] * ladder[j] * rho[i + 1, j + 1]
            if g_up != 0.0 and i > 0 and j > 0:
                d += 2.0 * g_up * ladder[i - 1] * ladder[j - 1] * rho[i - 1, j - 1]
            out[i, j] = -1j * comm + d
            if i == j:
                flux += energies[i] * d.real
            elif j == i + 1:
                flux += 0.5 * f * ladder[i] * d.real
            elif i == j + 1:
                flux += 0.5 * f * ladder[j] * d.real
    return flux


@njit(cache=True)
def _x_expectation(rho, ladder):
    s = 0.0
    for l in range(rho.shape[0] - 1):
        s += 0.5 * ladder[l] * (rho[l, l + 1].real + rho[l + 1, l].real)
    return s


@njit(cache=True)
def advance(rho, W, Q, first_step, n_steps, dt, energies, ladder, drive, omega,
            g_down, g_up, decay, trace_tol, watch_top, top_tol):
    """Take ``n_steps`` RK4 steps starting at step index ``first_step``.

    Returns ``(rho, W, Q, drift, status, steps_done)``; on a nonzero status
    ``rho`` is the last good state.
    """
    n = rho.shape[0]
    k1 = np.empty_like(rho)
    k2 = np.empty_like(rho)
    k3 = np.empty_like(rho)
    k4 = np.empty_like(rho)
    tmp = np.empty_like(rho)
    half = 0.5 * dt
    work_amp = -drive * omega
    drift = 0.0
    for s in range(n_steps):
        step = first_step + s
        t0 = (step - 1) * dt
        tm = t0 + half
        t1 = step * dt
        q1 = _rhs(rho, t0, energies, ladder, drive, omega, g_down, g_up, decay, k1)
        x1 = _x_expectation(rho, ladder)
        for i in range(n):
            for j in range(n):
                tmp[i, j] = rho[i, j] + half * k1[i, j]
        q2 = _rhs(tmp, tm, energies, ladder, drive, omega, g_down, g_up, decay, k2)
        x2 = _x_expectation(tmp, ladder)
        for i in range(n):
            for j in range(n):
                tmp[i, j] = rho[i, j] + half * k2[i, j]
        q3 = _rhs(tmp, tm, energies, ladder, drive, omega, g_down, g_up, decay, k3)
        x3 = _x_expectation(tmp, ladder)
        for i in range(n):
            for j in range(n):
                tmp[i, j] = rho[i, j] + dt * k3[i, j]
        q4 = _rhs(tmp, t1, energies, ladder, drive, omega, g_down, g_up, decay, k4)
        x4 = _x_expectation(tmp, ladder)

        for i in range(n):
            for j in range(n):
                tmp[i, j] = rho[i, j] + (dt / 6.0) * (k1[i, j] + 2.0 * k2[i, j] + 2.0 * k3[i, j] + k4[i, j])
        # re-Hermitize
        tr = 0.0
        for i in range(n):
            for j in range(i, n):
                v = 0.5 * (tmp[i, j] + tmp[j, i].conjugate())
                tmp[i, j] = v
                tmp[j, i] = v.conjugate()
            tr += tmp[i, i].real
        drift = abs(tr - 1.0)
        if drift >= trace_tol:
            return rho, W, Q, drift, STATUS_TRACE, s
        sm = math.sin(omega * tm)
        W += dt / 6.0 * work_amp * (
            math.sin(omega * t0) * x1 + 2.0 * sm * (x2 + x3) + math.sin(omega * t1) * x4
        )
        Q -= dt / 6.0 * (q1 + 2.0 * (q2 + q3) + q4)
        inv = 1.0 / tr
        new = np.empty_like(rho)
        for i in range(n):
            for j in range(n):
                new[i, j] = tmp[i, j] * inv
        rho = new
        if watch_top and rho[n - 1, n - 1].real + rho[n - 2, n - 2].real > top_tol:
            return rho, W, Q, drift, STATUS_TRUNCATION, s + 1
    return rho, W, Q, drift, STATUS_OK, n_steps
