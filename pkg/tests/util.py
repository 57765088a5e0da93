"""Shared test helpers."""

import math

import numpy as np

from hybridpulse.dynamics import evolve_ramp
from hybridpulse.model import HBAR, HybridParams, build_hamiltonian
from hybridpulse.pulses import PulseSegment


def lz_survival(gap, rate, *, width_factor=20.0, tol=1e-6):
    """Simulated diabatic survival for a linear sweep through the 1-E crossing.

    Starts from the adiabatic state nearest bare |1> at the window edge
    and projects onto the adiabatic |1>-like state at the far edge, which
    reproduces the asymptotic (infinite-window) transition probability at
    a modest window size.
    """
    p = HybridParams(E01=200.0, t1=0.0, t2=gap / 2.0)
    eps_cross = -p.E01
    width = width_factor * max(gap, math.sqrt(HBAR * rate))
    eps0, eps1 = eps_cross - width, eps_cross + width
    dt_max = 0.3 * HBAR / (p.E01 + width)

    def adiabatic_one(eps):
        _, v = np.linalg.eigh(build_hamiltonian(p, eps))
        idx = int(np.argmax(np.abs(v[1, :]) ** 2))
        return v[:, idx]

    v0 = adiabatic_one(eps0)
    rho0 = np.outer(v0, v0.conj())
    seg = PulseSegment.ramp(eps0, eps1, 2.0 * width / rate)
    rho = evolve_ramp(rho0, p, seg, np.zeros((3, 3)), dt_max=dt_max, tol=tol)
    v1 = adiabatic_one(eps1)
    return float(np.real(v1.conj() @ rho @ v1))
