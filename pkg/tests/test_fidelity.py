import math

import numpy as np
import pytest

from hybridpulse.compiler import GateSpec, SequenceOrder, target_rotation
from hybridpulse.dynamics import DephasingSpec
from hybridpulse.fidelity import (
    SweepRow,
    default_t1_grid,
    gate_fidelity,
    hybrid_sweep,
    sweep_point,
)
from hybridpulse.model import HBAR, HybridParams
from hybridpulse.pulses import PulseSchedule, PulseSegment

XPI = np.array([[0, -1j], [-1j, 0]], dtype=complex)


def test_decoherence_free_fidelity(params10, xpi_alternative):
    rep = gate_fidelity(params10, xpi_alternative.schedule, XPI, DephasingSpec.none())
    assert rep.fidelity > 1.0 - 1e-6
    assert rep.leakage < 1e-8
    assert rep.fidelity + rep.infidelity == 1.0


def test_identity_target_zero_schedule(params10):
    sched = PulseSchedule(segments=(PulseSegment.plateau(-300.0, 0.0),),
                          eps_init=-300.0, eps_final=-300.0)
    rep = gate_fidelity(params10, sched, np.eye(2, dtype=complex), DephasingSpec.none())
    assert rep.fidelity == pytest.approx(1.0, abs=1e-14)


def test_strong_dephasing_plateau_matches_bloch_oracle():
    # Two-level resonant block (t2 = 0 isolates it): r_z obeys the damped
    # oscillator r'' + Gamma r' + w^2 r = 0 with w = 2 t1 / hbar.
    t1, gamma_c = 5.0, 0.8
    p = HybridParams(E01=200.0, t1=t1, t2=0.0, Gamma=gamma_c, gamma=0.0)
    from hybridpulse.dynamics import evolve_plateau
    from hybridpulse.model import build_hamiltonian

    h = build_hamiltonian(p, 0.0)
    rates = DephasingSpec(Gamma=gamma_c, gamma=0.0).rate_matrix()
    w = 2.0 * t1 / HBAR
    omega = math.sqrt(w * w - 0.25 * gamma_c * gamma_c)
    rho = np.zeros((3, 3), dtype=complex)
    rho[0, 0] = 1.0
    for duration in (0.05, 0.13, 0.4, 1.1):
        out = evolve_plateau(rho, h, rates, duration)
        rz = math.exp(-0.5 * gamma_c * duration) * (
            math.cos(omega * duration)
            + 0.5 * gamma_c / omega * math.sin(omega * duration)
        )
        pop0 = 0.5 * (1.0 + rz)
        assert float(np.real(out[0, 0])) == pytest.approx(pop0, abs=1e-9)


def test_strong_dephasing_fidelity_plateau():
    # Parked at the resonance with Gamma*T >> 1, the rotation subspace
    # fully mixes; the six-state average against an x-pi target tends to
    # 1/4 (a "half-scale" floor, nowhere near either 0 or 1).
    t1 = 5.0
    p = HybridParams(E01=200.0, t1=t1, t2=0.0, Gamma=3.0, gamma=0.0)
    duration = 12.0 / 3.0  # Gamma * T = 12
    sched = PulseSchedule(segments=(PulseSegment.plateau(0.0, duration),),
                          eps_init=-300.0, eps_final=-300.0)
    rep = gate_fidelity(p, sched, XPI, DephasingSpec(Gamma=3.0, gamma=0.0))
    assert abs(rep.fidelity - 0.25) < 0.02


def test_doubling_dephasing_doubles_infidelity(params10, xpi_alternative):
    base = DephasingSpec(Gamma=0.05, gamma=5e-4)
    double = DephasingSpec(Gamma=0.10, gamma=1e-3)
    f1 = gate_fidelity(params10, xpi_alternative.schedule, XPI, base)
    f2 = gate_fidelity(params10, xpi_alternative.schedule, XPI, double)
    assert f1.infidelity < 0.05
    assert f2.infidelity >= 1.8 * f1.infidelity


def test_sweep_grid_validation():
    with pytest.raises(ValueError):
        hybrid_sweep(200.0, DephasingSpec(), [])
    with pytest.raises(ValueError):
        hybrid_sweep(200.0, DephasingSpec(), [5.0, 2.0])


def test_sweep_zero_dephasing_floor():
    grid = [4.0, 8.0, 16.0]
    res = hybrid_sweep(200.0, DephasingSpec.none(), grid)
    for row in res.rows:
        assert row.infidelity < 1e-6


def test_sweep_monotone_and_metadata():
    deph = DephasingSpec(Gamma=0.2, gamma=1e-3)
    res = hybrid_sweep(200.0, deph, default_t1_grid(6, 2.0, 30.0))
    vals = res.infidelities()
    assert all(b < a for a, b in zip(vals, vals[1:]))
    assert not any(r.merged for r in res.rows)
    assert res.metadata["E01_ueV"] == 200.0
    assert "metric" in res.metadata


def test_sweep_point_precondition_failure_flagged():
    row = sweep_point(50.0, DephasingSpec(), 40.0)
    assert row.merged and math.isnan(row.infidelity)


def test_sweep_csv_serialization():
    res = hybrid_sweep(200.0, DephasingSpec(Gamma=0.1, gamma=1e-3), [5.0, 10.0])
    text = res.to_csv_text(header_lines=("scenario-ish",))
    body = [l for l in text.splitlines() if not l.startswith("#")]
    assert body[0] == "t1_ueV,infidelity,merged"
    assert len(body) == 3
    t1_back = float(body[1].split(",")[0])
    assert t1_back == 5.0
