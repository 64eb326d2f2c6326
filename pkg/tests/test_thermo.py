import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from dicke_battery.lindblad import integrate
from dicke_battery.liouvillian import liouvillian_rhs
from dicke_battery.operators import build_collective, gibbs_state
from dicke_battery.params import SimulationParams
from dicke_battery.thermo import (
    StateError,
    accumulate_heat,
    accumulate_work,
    efficiency,
    entropy_from_eigenvalues,
    free_energy,
    internal_energy,
    total_energy,
    von_neumann_entropy,
)

T02 = 2 / math.log(6)  # bath temperature for nbar = 0.2 at omega = 2


@pytest.mark.parametrize("n", [1, 4, 9])
def test_energy_limits(n):
    ops = build_collective(n)
    ground = np.zeros((n + 1, n + 1), dtype=complex)
    ground[0, 0] = 1
    assert internal_energy(ground, ops, 2.0) == pytest.approx(-n)
    assert internal_energy(np.eye(n + 1) / (n + 1), ops, 2.0) == pytest.approx(0, abs=1e-15)


def test_single_atom_thermal_energy():
    ops = build_collective(1)
    assert internal_energy(gibbs_state(ops, 2.0, T02), ops, 2.0) == pytest.approx(-5 / 7, abs=1e-15)


def test_entropy_values():
    assert von_neumann_entropy(np.diag([1.0, 0.0]).astype(complex)) == 0
    assert von_neumann_entropy(np.eye(2) / 2) == pytest.approx(math.log(2))
    expected = -(6 / 7) * math.log(6 / 7) - (1 / 7) * math.log(1 / 7)
    rho = gibbs_state(build_collective(1), 2.0, T02)
    assert von_neumann_entropy(rho) == pytest.approx(expected, abs=1e-14)
    assert expected == pytest.approx(0.4101, abs=1e-4)


def test_entropy_of_pure_superposition_is_zero():
    v = np.array([1, 1j, -1]) / math.sqrt(3)
    assert von_neumann_entropy(np.outer(v, v.conj())) == pytest.approx(0, abs=1e-9)


def test_negative_eigenvalues_rejected():
    with pytest.raises(StateError):
        entropy_from_eigenvalues(np.array([1.1, -0.1]))


def test_free_energy():
    assert free_energy(-0.3, 0.5, 0.0) == -0.3
    assert free_energy(-0.3, 0.0, 4.0) == -0.3
    with pytest.raises(ValueError):
        free_energy(0.0, 0.0, -1.0)


@pytest.mark.parametrize("n", [1, 5, 12])
def test_thermal_free_energy_is_log_partition(n):
    ops = build_collective(n)
    rho = gibbs_state(ops, 2.0, T02)
    F = free_energy(internal_energy(rho, ops, 2.0), von_neumann_entropy(rho), T02)
    levels = 2.0 * (np.arange(n + 1) - n / 2)
    assert F == pytest.approx(-T02 * math.log(np.sum(np.exp(-levels / T02))), abs=1e-12)


def test_total_energy_at_field_nodes():
    p = SimulationParams(n_atoms=3)
    ops = build_collective(3)
    v = np.ones(4) / 2
    rho = np.outer(v, v).astype(complex)
    t = math.pi / (2 * p.omega)
    assert total_energy(rho, ops, p, t) == pytest.approx(internal_energy(rho, ops, p.omega0), abs=1e-15)
    assert total_energy(rho, ops, p, 0.0) != pytest.approx(internal_energy(rho, ops, p.omega0))


def test_stage_quadrature_matches_integrator():
    p = SimulationParams(n_atoms=4, t_max=1.0, record_stride=1, nbar=0.5)
    p = p.with_(t_max=p.time_step)
    ops = build_collective(4)
    traj = integrate(p)
    rho, dt = traj.states[0], p.time_step

    def rhs(r, t):
        return liouvillian_rhs(r, t, p, ops)

    k1 = rhs(rho, 0)
    r2 = rho + dt / 2 * k1
    k2 = rhs(r2, dt / 2)
    r3 = rho + dt / 2 * k2
    k3 = rhs(r3, dt / 2)
    r4 = rho + dt * k3
    stages = [(0.0, rho), (dt / 2, r2), (dt / 2, r3), (dt, r4)]
    assert traj.records[1].W == pytest.approx(accumulate_work(stages, dt, p, ops), rel=1e-12)
    assert traj.records[1].Q == pytest.approx(accumulate_heat(stages, dt, p, ops), rel=1e-12)
    with pytest.raises(ValueError):
        accumulate_work(stages[:3], dt, p, ops)


def test_no_drive_no_work():
    traj = integrate(SimulationParams(amplitude=0.0, n_atoms=3, t_max=20.0), keep_states=False)
    assert np.all(traj.column("W") == 0)
    np.testing.assert_array_equal(traj.column("H_total"), traj.column("E"))


def test_closed_system_work_becomes_energy():
    p = SimulationParams(gamma=0.0, n_atoms=4, t_max=60.0)
    traj = integrate(p, keep_states=False)
    assert np.all(traj.column("Q") == 0)
    dH = traj.column("H_total") - traj.records[0].H_total
    assert np.max(np.abs(traj.column("W") - dH)) <= 1e-6 * p.omega0
    # the interaction energy goes negative at times, pushing <H> below F
    assert np.any(dH < traj.column("deltaF"))
    eta = traj.column("eta")
    assert np.nanmax(eta) > 1


def test_work_starts_positive_from_ground_state():
    p = SimulationParams(nbar=0.0, record_stride=1)
    p = p.with_(t_max=p.period / 4)
    assert np.min(integrate(p, keep_states=False).column("W")) >= 0


def test_long_time_heat_converges_with_step():
    p = SimulationParams(nbar=0.0, t_max=64 * math.pi)
    a = integrate(p, keep_states=False).records[-1]
    b = integrate(p.with_(dt=p.time_step / 2), keep_states=False).records[-1]
    assert a.t == b.t
    assert abs(a.first_law_residual) < 1e-6 * max(abs(a.W), p.omega0)
    assert abs(a.Q - b.Q) < 1e-7 * max(1.0, abs(a.Q))


def test_first_law_residual_small():
    for n in (1, 10):
        p = SimulationParams(n_atoms=n, t_max=100.0)
        traj = integrate(p, keep_states=False)
        W = traj.column("W")
        bound = 1e-6 * np.maximum(np.abs(W), p.omega0)
        assert np.all(np.abs(traj.column("first_law_residual")) <= bound)


def test_efficiency_undefined_for_tiny_work():
    assert efficiency(0.1, 0.0) is None
    assert efficiency(0.1, 1e-12) is None
    assert efficiency(0.1, 0.2) == 0.5


def test_efficiency_falls_with_battery_size():
    p = SimulationParams(t_max=300.0)
    eta1 = integrate(p, keep_states=False).records[-1].eta
    eta17 = integrate(p.with_(n_atoms=17), keep_states=False).records[-1].eta
    assert eta17 < eta1


@given(st.integers(1, 12), st.floats(0, 0.5), st.floats(0.1, 1))
def test_record_bounds(n, gamma, nbar):
    p = SimulationParams(n_atoms=n, gamma=gamma, nbar=nbar, t_max=3.0)
    traj = integrate(p, keep_states=False)
    S = traj.column("S")
    assert np.all(S >= 0) and np.all(S <= math.log(n + 1) + 1e-12)
    S0 = traj.records[0].S
    assert np.all(traj.column("deltaF") <= traj.column("deltaE") + traj.temperature * S0 + 1e-12)
    F = traj.column("E") - traj.temperature * S
    np.testing.assert_allclose(traj.column("F"), F, atol=1e-14)


def test_pure_start_needs_finer_step():
    from dicke_battery.lindblad import NumericalError

    p = SimulationParams(nbar=0.0, n_atoms=9, t_max=20.0)
    with pytest.raises(NumericalError):
        integrate(p, keep_states=False)
    fine = integrate(p.with_(dt=p.period / 1600), keep_states=False)
    assert fine.min_eigenvalues.min() >= -1e-8
