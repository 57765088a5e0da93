import io
import math

import numpy as np
import pytest
from scipy.linalg import expm

from hybridpulse.dynamics import (
    DensityState,
    DephasingSpec,
    StateInvariantViolation,
    StepTooLarge,
    evolve_plateau,
    evolve_ramp,
    integrate_ramp,
    purity,
    run_schedule,
    trace_distance,
)
from hybridpulse.model import HBAR, HybridParams, build_hamiltonian
from hybridpulse.pulses import PulseSchedule, PulseSegment, landau_zener_probability


def random_density(rng, n=3):
    a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    rho = a @ a.conj().T
    return rho / np.trace(rho)


def test_unitary_limit_matches_matrix_exponential():
    rng = np.random.default_rng(21)
    p = HybridParams.with_valley_ratio(200.0, 10.0)
    zero = np.zeros((3, 3))
    for _ in range(20):
        eps = rng.uniform(-300, 100)
        T = rng.uniform(0.01, 0.5)
        rho0 = random_density(rng)
        h = build_hamiltonian(p, eps)
        rho = evolve_plateau(rho0, h, zero, T)
        u = expm(-1j * h * T / HBAR)
        assert trace_distance(rho, u @ rho0 @ u.conj().T) < 1e-12


def test_pure_coherence_decay_closed_form():
    rho0 = DensityState.pure([1.0, 0.0, 1.0]).rho
    rates = DephasingSpec(Gamma=0.37, gamma=0.0).rate_matrix()
    T = 2.5
    rho = evolve_plateau(rho0, np.zeros((3, 3)), rates, T)
    assert rho[0, 2] == pytest.approx(rho0[0, 2] * math.exp(-0.37 * T), abs=1e-12)


def test_diagonal_hamiltonian_keeps_populations():
    rng = np.random.default_rng(22)
    rho0 = random_density(rng)
    h = np.diag([0.0, 200.0, 35.0]).astype(complex)
    rates = DephasingSpec(Gamma=0.2, gamma=1e-3).rate_matrix()
    rho = evolve_plateau(rho0, h, rates, 1.7)
    assert np.allclose(np.diag(rho), np.diag(rho0), atol=1e-12)


def test_plateau_superoperator_vs_rk4_cross_check():
    p = HybridParams.with_valley_ratio(200.0, 10.0)
    rho0 = DensityState.pure([1.0, 0.0, 0.0]).rho
    rates = DephasingSpec(Gamma=0.2, gamma=1e-3).rate_matrix()
    h = build_hamiltonian(p, -20.0)
    T = 0.3
    exact = evolve_plateau(rho0, h, rates, T)
    rk4 = integrate_ramp(rho0, lambda t: h, rates, T, dt_max=1e-3, tol=1e-10)
    assert trace_distance(exact, rk4) < 1e-8


def test_ramp_zero_length_identity():
    p = HybridParams.with_valley_ratio(200.0, 5.0)
    rho0 = DensityState.pure([0.0, 1.0, 0.0]).rho
    seg = PulseSegment.ramp(-300.0, -100.0, 0.0)
    rho = evolve_ramp(rho0, p, seg, DephasingSpec.none().rate_matrix())
    assert np.array_equal(rho, rho0)


def test_ramp_decoupled_populations_frozen():
    p = HybridParams(E01=200.0, t1=0.0, t2=0.0)
    rng = np.random.default_rng(23)
    rho0 = random_density(rng)
    seg = PulseSegment.ramp(-300.0, 50.0, 1.0)
    rho = evolve_ramp(rho0, p, seg, DephasingSpec(0.1, 0.01).rate_matrix())
    assert np.allclose(np.diag(rho), np.diag(rho0), atol=1e-10)


def test_landau_zener_single_case():
    # gap 4 ueV swept at 100 ueV/ns; diabatic survival ~ 0.683.
    from util import lz_survival

    expected = landau_zener_probability(4.0, 100.0)
    assert abs(lz_survival(4.0, 100.0) - expected) / expected < 0.02


def test_step_too_large_raises():
    p = HybridParams.with_valley_ratio(200.0, 10.0)
    rho0 = DensityState.basis(0).rho
    seg = PulseSegment.ramp(-300.0, 0.0, 1.0)
    with pytest.raises(StepTooLarge):
        evolve_ramp(rho0, p, seg, np.zeros((3, 3)), dt_max=0.5, tol=1e-14, max_halvings=1)


def test_purity_values():
    assert purity(DensityState.basis(0).rho) == pytest.approx(1.0)
    assert purity(np.eye(3) / 3.0) == pytest.approx(1.0 / 3.0)


def test_purity_monotone_under_dephasing():
    rho = DensityState.pure([1.0, 1.0, 1.0]).rho
    h = np.diag([0.0, 200.0, 50.0]).astype(complex)
    rates = DephasingSpec(Gamma=0.3, gamma=0.05).rate_matrix()
    values = []
    for _ in range(15):
        values.append(purity(rho))
        rho = evolve_plateau(rho, h, rates, 0.2)
    values.append(purity(rho))
    assert all(b <= a + 1e-12 for a, b in zip(values, values[1:]))


def test_run_schedule_snapshots_and_invariants(params10, xpi_alternative):
    deph = DephasingSpec(Gamma=0.2, gamma=1e-3)
    traj = run_schedule(DensityState.basis(0), params10, xpi_alternative.schedule,
                        deph, samples_per_segment=3)
    assert len(traj.times) == 1 + 5 * 4
    assert all(b >= a for a, b in zip(traj.times, traj.times[1:]))
    for state in traj.states:
        tr = np.trace(state.rho)
        assert abs(tr - 1.0) < 1e-10
        assert np.linalg.norm(state.rho - state.rho.conj().T) < 1e-10
        assert np.min(np.linalg.eigvalsh(state.rho)) > -1e-9


def test_run_schedule_zero_duration_is_identity(params10):
    sched = PulseSchedule(
        segments=(PulseSegment.plateau(-50.0, 0.0), PulseSegment.plateau(-200.0, 0.0)),
        eps_init=-300.0, eps_final=-300.0,
    )
    rho0 = DensityState.pure([1.0, 1.0, 0.0])
    traj = run_schedule(rho0, params10, sched, DephasingSpec.none())
    assert trace_distance(traj.final.rho, rho0.rho) < 1e-15


def test_xpi_schedule_transfers_population(params10, xpi_alternative):
    traj = run_schedule(DensityState.basis(0), params10, xpi_alternative.schedule,
                        DephasingSpec.none())
    assert float(np.real(traj.final.rho[1, 1])) > 1.0 - 1e-8


def test_xpi_schedule_with_dephasing_infidelity_range(params10, xpi_alternative):
    deph = DephasingSpec(Gamma=0.2, gamma=1e-3)
    traj = run_schedule(DensityState.basis(0), params10, xpi_alternative.schedule, deph)
    pop1 = float(np.real(traj.final.rho[1, 1]))
    assert 1e-3 < 1.0 - pop1 < 1e-1


def test_density_state_validation_raises():
    bad = DensityState(rho=np.diag([0.7, 0.7, -0.4]).astype(complex))
    with pytest.raises(StateInvariantViolation):
        bad.validate()
    lopsided = DensityState(rho=np.array([[0.5, 0.3, 0], [0.1, 0.5, 0], [0, 0, 0.0]], dtype=complex))
    with pytest.raises(StateInvariantViolation):
        lopsided.validate()


def test_trajectory_csv_roundtrip(params10, xpi_standard):
    traj = run_schedule(DensityState.basis(0), params10, xpi_standard.schedule,
                        DephasingSpec(Gamma=0.1, gamma=1e-3))
    text = traj.to_csv_text(header_lines=("example = 1",))
    lines = [l for l in text.splitlines() if not l.startswith("#")]
    assert lines[0].startswith("time_ns,pop0,pop1,popE,purity")
    data = np.array([[float(v) for v in l.split(",")] for l in lines[1:]])
    assert data.shape[0] == len(traj.times)
    np.testing.assert_allclose(data[:, 0], traj.times, rtol=0, atol=0)
    np.testing.assert_allclose(data[:, 1:4], traj.populations(), rtol=0, atol=0)
