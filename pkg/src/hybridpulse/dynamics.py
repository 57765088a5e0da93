"""Dissipative evolution of small dense density matrices.

The master equation is i*hbar*drho/dt = [H, rho] + D with D a pure
dephasing term: each coherence rho_ij decays at a fixed rate given by a
symmetric rate matrix (Gamma for anything involving |E>, gamma for the
logical 0-1 coherence). Constant-detuning plateaus are propagated
exactly through the exponential of the n^2 x n^2 superoperator; linear
ramps are integrated with RK4 and a step-halving convergence check.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import expm

from .model import HBAR, LEVELS, HybridParams, build_hamiltonian


class StateInvariantViolation(RuntimeError):
    """A density matrix failed its trace/Hermiticity/positivity checks."""


class StepTooLarge(RuntimeError):
    """Ramp integration did not converge at the smallest allowed step."""


class _Stats:
    """Running count of snapshot validations (used by the acceptance suite)."""

    snapshots = 0


STATS = _Stats()


@dataclass(frozen=True)
class DephasingSpec:
    """Dephasing rates: Gamma on any coherence with |E>, gamma on 0-1."""

    Gamma: float = 0.2
    gamma: float = 1e-3

    def __post_init__(self):
        if self.Gamma < 0 or self.gamma < 0:
            raise ValueError(f"dephasing rates must be >= 0, got {self}")

    def rate_matrix(self) -> np.ndarray:
        g, G = self.gamma, self.Gamma
        return np.array([[0.0, g, G], [g, 0.0, G], [G, G, 0.0]])

    @classmethod
    def none(cls):
        return cls(Gamma=0.0, gamma=0.0)

    @classmethod
    def from_params(cls, p: HybridParams):
        return cls(Gamma=p.Gamma, gamma=p.gamma)


@dataclass
class DensityState:
    """Density matrix over an ordered level basis."""

    rho: np.ndarray
    labels: tuple = LEVELS

    @classmethod
    def pure(cls, amplitudes, labels=LEVELS):
        v = np.asarray(amplitudes, dtype=complex)
        v = v / np.linalg.norm(v)
        return cls(rho=np.outer(v, v.conj()), labels=tuple(labels))

    @classmethod
    def basis(cls, index, dim=3, labels=LEVELS):
        v = np.zeros(dim, dtype=complex)
        v[index] = 1.0
        return cls.pure(v, labels=labels)

    def validate(self, *, trace_tol=1e-10, herm_tol=1e-10, eig_floor=-1e-9):
        STATS.snapshots += 1
        rho = self.rho
        tr = np.trace(rho)
        if abs(tr - 1.0) > trace_tol:
            raise StateInvariantViolation(f"trace {tr} deviates from 1 by more than {trace_tol}")
        herm = np.max(np.abs(rho - rho.conj().T))
        if herm > herm_tol:
            raise StateInvariantViolation(f"Hermiticity defect {herm} exceeds {herm_tol}")
        lo = np.min(np.linalg.eigvalsh(0.5 * (rho + rho.conj().T)))
        if lo < eig_floor:
            raise StateInvariantViolation(f"negative eigenvalue {lo} below {eig_floor}")
        return self

    def populations(self) -> np.ndarray:
        return np.real(np.diag(self.rho)).copy()


def purity(rho) -> float:
    """Tr(rho^2); 1 for pure states, 1/n for the maximally mixed state."""
    m = rho.rho if isinstance(rho, DensityState) else rho
    return float(np.real(np.trace(m @ m)))


def trace_distance(a: np.ndarray, b: np.ndarray) -> float:
    """(1/2) * trace norm of (a - b) for Hermitian a, b."""
    diff = a - b
    return 0.5 * float(np.sum(np.abs(np.linalg.eigvalsh(0.5 * (diff + diff.conj().T)))))


def liouvillian(h: np.ndarray, rates: np.ndarray, hbar: float = HBAR) -> np.ndarray:
    """Superoperator L with vec(drho/dt) = L vec(rho), row-major vec."""
    n = h.shape[0]
    eye = np.eye(n)
    l = (-1j / hbar) * (np.kron(h, eye) - np.kron(eye, h.T))
    return l - np.diag(np.asarray(rates, dtype=float).reshape(-1))


def plateau_propagator(h: np.ndarray, rates: np.ndarray, duration: float, hbar: float = HBAR) -> np.ndarray:
    """exp(L * T), the exact map for a constant segment."""
    return expm(liouvillian(h, rates, hbar) * duration)


def evolve_plateau(rho: np.ndarray, h: np.ndarray, rates: np.ndarray, duration: float, hbar: float = HBAR) -> np.ndarray:
    """Propagate rho over a constant segment via the superoperator exponential."""
    if duration == 0.0:
        return rho.copy()
    n = h.shape[0]
    out = plateau_propagator(h, rates, duration, hbar) @ rho.reshape(-1)
    return out.reshape(n, n)


def _master_rhs(rho, h, rates, hbar):
    return (-1j / hbar) * (h @ rho - rho @ h) - rates * rho


def _rk4_pass(rho, h_of_t, rates, t0, duration, steps, hbar):
    dt = duration / steps
    for k in range(steps):
        t = t0 + k * dt
        k1 = _master_rhs(rho, h_of_t(t), rates, hbar)
        h_mid = h_of_t(t + 0.5 * dt)
        k2 = _master_rhs(rho + 0.5 * dt * k1, h_mid, rates, hbar)
        k3 = _master_rhs(rho + 0.5 * dt * k2, h_mid, rates, hbar)
        k4 = _master_rhs(rho + dt * k3, h_of_t(t + dt), rates, hbar)
        rho = rho + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        rho = 0.5 * (rho + rho.conj().T)  # keep Hermitian against roundoff
    return rho


def integrate_ramp(rho, h_of_t, rates, duration, *, dt_max=1e-3, tol=1e-8,
                   max_halvings=12, hbar=HBAR):
    """RK4 integration of the master equation over [0, duration].

    h_of_t supplies the (time-dependent) Hamiltonian. The step is halved
    until two consecutive resolutions agree to `tol` in trace distance;
    StepTooLarge is raised if the budget of halvings is exhausted.
    """
    if duration == 0.0:
        return rho.copy()
    steps = max(1, int(math.ceil(duration / dt_max)))
    prev = _rk4_pass(rho, h_of_t, rates, 0.0, duration, steps, hbar)
    for _ in range(max_halvings):
        steps *= 2
        cur = _rk4_pass(rho, h_of_t, rates, 0.0, duration, steps, hbar)
        if trace_distance(cur, prev) < tol:
            return cur
        prev = cur
    raise StepTooLarge(
        f"ramp integration not converged to {tol} after {max_halvings} halvings"
    )


def evolve_ramp(rho: np.ndarray, p: HybridParams, seg, rates: np.ndarray, *,
                dt_max=1e-3, tol=1e-8, max_halvings=12) -> np.ndarray:
    """Integrate over a linear detuning ramp segment."""
    if seg.duration == 0.0:
        return rho.copy()
    slope = (seg.eps_end - seg.eps_start) / seg.duration

    def h_of_t(t):
        return build_hamiltonian(p, seg.eps_start + slope * t)

    return integrate_ramp(rho, h_of_t, rates, seg.duration,
                          dt_max=dt_max, tol=tol, max_halvings=max_halvings, hbar=p.hbar)


@dataclass
class Trajectory:
    """Time-stamped density-matrix snapshots along a schedule."""

    times: list = field(default_factory=list)
    states: list = field(default_factory=list)  # DensityState snapshots

    def append(self, t, state: DensityState):
        self.times.append(float(t))
        self.states.append(state)

    @property
    def final(self) -> DensityState:
        return self.states[-1]

    def populations(self) -> np.ndarray:
        return np.array([s.populations() for s in self.states])

    def purities(self) -> np.ndarray:
        return np.array([purity(s) for s in self.states])

    def to_csv(self, stream, header_lines=()) -> None:
        """Write `time, populations, purity, coherences` rows (3-level only)."""
        if self.states and self.states[0].rho.shape != (3, 3):
            raise ValueError("trajectory CSV output is defined for 3-level states")
        for line in header_lines:
            stream.write(f"# {line}\n")
        stream.write("time_ns,pop0,pop1,popE,purity,re01,im01,re0E,im0E,re1E,im1E\n")
        fmt = lambda x: f"{x:.17g}"
        for t, s in zip(self.times, self.states):
            r = s.rho
            row = [t, r[0, 0].real, r[1, 1].real, r[2, 2].real, purity(s),
                   r[0, 1].real, r[0, 1].imag, r[0, 2].real, r[0, 2].imag,
                   r[1, 2].real, r[1, 2].imag]
            stream.write(",".join(fmt(x) for x in row) + "\n")

    def to_csv_text(self, header_lines=()) -> str:
        buf = io.StringIO()
        self.to_csv(buf, header_lines)
        return buf.getvalue()


def run_schedule(rho0: DensityState, p: HybridParams, sched, deph: DephasingSpec,
                 *, samples_per_segment=0, validate=True, dt_max=1e-3) -> Trajectory:
    """Evolve an initial state through every segment of a pulse schedule.

    Snapshots are taken at segment boundaries, plus `samples_per_segment`
    interior points per segment when requested. Every snapshot is
    validated against the density-matrix invariants unless validate is
    switched off.
    """
    rates = deph.rate_matrix()
    traj = Trajectory()
    t = 0.0

    def record(rho, t):
        state = DensityState(rho=rho, labels=rho0.labels)
        if validate:
            state.validate()
        traj.append(t, state)
        return state

    rho = rho0.rho.copy()
    record(rho, t)
    for seg in sched.segments:
        if seg.shape == "plateau":
            h = build_hamiltonian(p, seg.eps_start)
            if samples_per_segment > 0 and seg.duration > 0.0:
                dt = seg.duration / (samples_per_segment + 1)
                prop = plateau_propagator(h, rates, dt, p.hbar)
                for _ in range(samples_per_segment):
                    rho = (prop @ rho.reshape(-1)).reshape(rho.shape)
                    t += dt
                    record(rho, t)
                rho = (prop @ rho.reshape(-1)).reshape(rho.shape)
                t = t - samples_per_segment * dt + seg.duration
            else:
                rho = evolve_plateau(rho, h, rates, seg.duration, p.hbar)
                t += seg.duration
        else:
            n_sub = max(1, samples_per_segment + 1)
            sub = seg.duration / n_sub
            slope = ((seg.eps_end - seg.eps_start) / seg.duration) if seg.duration else 0.0
            for k in range(n_sub):
                e0 = seg.eps_start + slope * (k * sub)
                e1 = seg.eps_start + slope * ((k + 1) * sub)

                def h_of_t(tau, e0=e0, e1=e1):
                    return build_hamiltonian(p, e0 + (e1 - e0) * (tau / sub if sub else 0.0))

                rho = integrate_ramp(rho, h_of_t, rates, sub, dt_max=dt_max, hbar=p.hbar)
                t += sub
                if k < n_sub - 1:
                    record(rho, t)
        record(rho, t)
    return traj
