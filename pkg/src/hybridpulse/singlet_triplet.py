"""Exchange-gate baseline: a singlet-triplet qubit in a double dot.

Three-level model in the basis (S(1,1), T0(1,1), S(0,2)): the singlets
are tunnel-coupled with amplitude t, the magnetic field gradient couples
S(1,1) to T0, and the detuning moves S(0,2). The z rotation runs at the
hybridized exchange splitting J; pulsing toward the anticrossing speeds
the gate up but makes the qubit charge-like, which is the trade-off the
detuning optimizer resolves per working point.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .dynamics import DensityState, plateau_propagator
from .fidelity import CARDINAL_STATES, METRIC_NOTE, FidelityReport
from .model import HBAR
from .search import golden_maximize

MU_B = 57.88  # ueV / T

ST_LEVELS = ("S11", "T0", "S02")


class OptimizationBracketFailed(RuntimeError):
    pass


@dataclass(frozen=True)
class STParams:
    """Material parameters of one singlet-triplet qubit.

    delta_b is the inter-dot field difference in tesla; gamma_st the
    spin dephasing rate of the S-T0 coherence; Gamma_charge the charge
    dephasing rate of any coherence with S(0,2). The nominal tunnel
    coupling t is optional; sweep operations pass t explicitly.
    """

    label: str
    gamma_st: float
    delta_b: float
    g_factor: float
    Gamma_charge: float = 0.2
    t: float | None = None
    hbar: float = HBAR

    def __post_init__(self):
        if self.gamma_st < 0 or self.Gamma_charge < 0:
            raise ValueError(f"dephasing rates must be >= 0 in {self}")
        if self.delta_b < 0:
            raise ValueError(f"delta_b must be >= 0, got {self.delta_b}")

    @property
    def gradient_energy(self) -> float:
        """Magnetic-gradient coupling g * mu_B * dB in ueV."""
        return abs(self.g_factor) * MU_B * self.delta_b


MATERIALS = {
    "gaas": STParams(label="GaAs", gamma_st=0.14, delta_b=3.6e-3, g_factor=0.44),
    "natural_si": STParams(label="natural Si", gamma_st=1.5e-3, delta_b=26e-6, g_factor=2.0),
    "purified_si": STParams(label="purified Si", gamma_st=2e-4, delta_b=1.2e-6, g_factor=2.0),
}


def build_st_hamiltonian(st: STParams, t: float, eps: float) -> np.ndarray:
    """3x3 Hamiltonian in the (S(1,1), T0, S(0,2)) basis at detuning eps."""
    de_b = st.gradient_energy
    return np.array(
        [
            [0.0, de_b, t],
            [de_b, 0.0, 0.0],
            [t, 0.0, -eps],
        ],
        dtype=complex,
    )


def st_rate_matrix(st: STParams) -> np.ndarray:
    g, G = st.gamma_st, st.Gamma_charge
    return np.array([[0.0, g, G], [g, 0.0, G], [G, G, 0.0]])


def exchange_splitting(st: STParams, t: float, eps: float) -> float:
    """Energy of the T0-like branch above the S-like ground branch.

    Branches are identified by eigenvector overlap with the bare states,
    which stays well defined while the gradient is a small perturbation.
    """
    w, v = np.linalg.eigh(build_st_hamiltonian(st, t, eps))
    weights = np.abs(v) ** 2
    i_s = int(np.argmax(weights[0, :]))
    i_t = int(np.argmax(weights[1, :]))
    if i_s == i_t:
        raise ValueError(f"cannot resolve S/T0 branches at eps = {eps}")
    return float(w[i_t] - w[i_s])


def st_fidelity(st: STParams, t: float, eps: float) -> FidelityReport:
    """Score a pi z-rotation performed by parking at detuning eps.

    The plateau duration is pi * hbar / J with J the hybridized exchange
    splitting; the six cardinal (S, T0) inputs are propagated under the
    dephasing master equation and compared against the ideal z rotation
    in the bare basis, so the sudden-jump charge admixture counts as
    infidelity, exactly like the speed-versus-charge-noise trade-off it
    models.
    """
    j = exchange_splitting(st, t, eps)
    if j <= 0:
        raise ValueError(f"exchange splitting must be positive, got {j} at eps = {eps}")
    duration = math.pi * st.hbar / j
    h = build_st_hamiltonian(st, t, eps)
    prop = plateau_propagator(h, st_rate_matrix(st), duration, st.hbar)
    target = np.diag([1.0, -1.0]).astype(complex)  # z rotation by pi, global phase dropped

    per_state = {}
    leaks = []
    for label, amps in CARDINAL_STATES:
        vec = np.array([amps[0], amps[1], 0.0], dtype=complex)
        rho = np.outer(vec, vec.conj())
        rho = (prop @ rho.reshape(-1)).reshape(3, 3)
        t_vec = np.zeros(3, dtype=complex)
        t_vec[:2] = target @ np.asarray(amps, dtype=complex)
        per_state[label] = float(np.real(t_vec.conj() @ rho @ t_vec))
        leaks.append(float(np.real(rho[2, 2])))
    fidelity = float(np.mean(list(per_state.values())))
    return FidelityReport(fidelity=fidelity, leakage=float(np.mean(leaks)), per_state=per_state)


def st_optimize_eps(st: STParams, t: float, *, bracket=None, xtol=1e-4):
    """Pick the detuning that maximizes the pi-rotation fidelity.

    Golden-section search on log|eps| between a near-anticrossing edge
    and a deep-detuning edge (default |eps|/t from 2.5 to 500). Returns
    (eps_opt, report at the optimum).
    """
    if t <= 0:
        raise OptimizationBracketFailed(f"need a positive tunnel coupling, got {t}")
    if bracket is None:
        bracket = (-500.0 * t, -2.5 * t)
    lo, hi = bracket
    if not (lo < hi < 0.0):
        raise OptimizationBracketFailed(f"need lo < hi < 0, got {bracket}")

    def fid_of_log(u):
        return st_fidelity(st, t, -math.exp(u)).fidelity

    u_opt, _ = golden_maximize(fid_of_log, math.log(-hi), math.log(-lo), xtol=xtol)
    eps_opt = -math.exp(u_opt)
    return eps_opt, st_fidelity(st, t, eps_opt)


@dataclass(frozen=True)
class STSweepRow:
    t: float
    infidelity: float
    eps_opt: float


@dataclass
class STSweepResult:
    material: str
    rows: list = field(default_factory=list)
    metadata: dict = field(default_factory=dict)

    def infidelities(self):
        return [r.infidelity for r in self.rows]

    def to_csv(self, stream, header_lines=()):
        for line in header_lines:
            stream.write(f"# {line}\n")
        for key, value in self.metadata.items():
            stream.write(f"# {key} = {value}\n")
        stream.write("material,t_ueV,infidelity,eps_opt_ueV\n")
        for r in self.rows:
            stream.write(
                f"{self.material},{r.t:.17g},{r.infidelity:.17g},{r.eps_opt:.17g}\n"
            )


def st_sweep(st: STParams, t_grid, *, bracket_factors=(500.0, 2.5), map_fn=map) -> STSweepResult:
    """Optimized exchange-gate infidelity across a tunnel-coupling grid."""
    grid = list(t_grid)
    if not grid or any(b <= a for a, b in zip(grid, grid[1:])):
        raise ValueError("t grid must be non-empty and strictly ascending")
    deep, near = bracket_factors

    def point(t):
        eps_opt, report = st_optimize_eps(st, t, bracket=(-deep * t, -near * t))
        return STSweepRow(t=t, infidelity=report.infidelity, eps_opt=eps_opt)

    rows = list(map_fn(point, grid))
    meta = {
        "material": st.label,
        "gamma_st_per_ns": st.gamma_st,
        "delta_b_T": st.delta_b,
        "g_factor": st.g_factor,
        "Gamma_charge_per_ns": st.Gamma_charge,
        "eps_bracket": f"[-{deep}*t, -{near}*t]",
        "metric": METRIC_NOTE,
    }
    return STSweepResult(material=st.label, rows=rows, metadata=meta)


def comparison_sweep(materials, t_grid, *, map_fn=map) -> dict:
    """st_sweep per material; materials may be STParams or preset names."""
    out = {}
    for m in materials:
        st = MATERIALS[m] if isinstance(m, str) else m
        out[st.label] = st_sweep(st, t_grid, map_fn=map_fn)
    return out
