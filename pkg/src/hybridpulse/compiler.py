"""Ideal gate algebra for the five-pulse logical rotations.

The primitive gates are 3x3 unitaries in the fixed (|0>, |1>, |E>)
basis: B swaps |1> and |E> (a pi rotation in that subspace), A rotates
the (|0>, |E>) pair by a tunable angle theta, and P accumulates relative
phases. Composing B P2 A P1 B (or the equivalent P2 B A B P1 with the
role of the two phases of each P gate exchanged) produces an arbitrary
rotation of the logical qubit; compile_rotation solves for the control
angles in closed form.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

TWO_PI = 2.0 * math.pi

SIGMA_0 = np.eye(2, dtype=complex)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULIS = (SIGMA_0, SIGMA_X, SIGMA_Y, SIGMA_Z)


class DimensionMismatch(ValueError):
    pass


class SequenceOrder(enum.Enum):
    """Pulse ordering of the five-gate sequence (first gate acts first).

    STANDARD runs B, P1, A, P2, B with the phase plateau between the two
    crossings; ALTERNATIVE runs P1, B, A, B, P2 with the phase plateau
    below the B crossing, where the phases ride the protected logical
    splitting instead of the |0>-|E> splitting.
    """

    STANDARD = "standard"
    ALTERNATIVE = "alternative"


def wrap_angle(x: float) -> float:
    """Reduce an angle to [0, 2*pi)."""
    return float(x % TWO_PI)


@dataclass(frozen=True)
class GateSpec:
    """Target logical rotation: angle beta about the axis given by the
    polar angle eta and azimuthal angle zeta."""

    beta: float
    eta: float
    zeta: float

    def __post_init__(self):
        if not 0.0 <= self.beta < TWO_PI:
            raise ValueError(f"beta must lie in [0, 2*pi), got {self.beta}")
        if not 0.0 <= self.eta <= math.pi:
            raise ValueError(f"eta must lie in [0, pi], got {self.eta}")
        if not 0.0 <= self.zeta < TWO_PI:
            raise ValueError(f"zeta must lie in [0, 2*pi), got {self.zeta}")

    @classmethod
    def x_rotation(cls, beta):
        return cls(beta=beta, eta=math.pi / 2, zeta=0.0)

    @classmethod
    def z_rotation(cls, beta):
        return cls(beta=beta, eta=0.0, zeta=0.0)


@dataclass(frozen=True)
class ControlParams:
    """Compiled control angles: the A-gate rotation theta and the two
    phase-gate angles phi1, phi2 (reduced mod 2*pi)."""

    theta: float
    phi1: float
    phi2: float


@dataclass(frozen=True)
class PhaseRecord:
    """Incidental phases picked up by spectator levels during the gates.

    phi_B is the phase gained by |1> and |E> during B. alpha_A is the
    phase gained by |1> during A. alpha_1/alpha_2 are the spectator
    phases during P1/P2: on |1> in the standard order, on |E> in the
    alternative order.
    """

    phi_B: float = 0.0
    alpha_A: float = 0.0
    alpha_1: float = 0.0
    alpha_2: float = 0.0


def gate_B(phi_B: float) -> np.ndarray:
    """Pi rotation in the (|1>, |E>) subspace; both states gain exp(i*phi_B)."""
    b = -1j * np.exp(1j * phi_B)
    return np.array([[1, 0, 0], [0, 0, b], [0, b, 0]], dtype=complex)


def gate_A(theta: float, alpha_A: float = 0.0) -> np.ndarray:
    """Rotation by theta in the (|0>, |E>) subspace; |1> gains exp(i*alpha_A)."""
    c = math.cos(theta / 2.0)
    s = -1j * math.sin(theta / 2.0)
    a = np.exp(1j * alpha_A)
    return np.array([[c, 0, s], [0, a, 0], [s, 0, c]], dtype=complex)


def gate_P(phi: float, alpha: float = 0.0) -> np.ndarray:
    """Phase plateau: |E> gains exp(i*phi), |1> gains exp(i*alpha)."""
    return np.diag([1.0, np.exp(1j * alpha), np.exp(1j * phi)]).astype(complex)


def rotation_from_axis_angle(beta: float, eta: float, zeta: float) -> np.ndarray:
    """SU(2) rotation exp(-i * beta/2 * n.sigma) for the axis (eta, zeta)."""
    n = (
        math.sin(eta) * math.cos(zeta),
        math.sin(eta) * math.sin(zeta),
        math.cos(eta),
    )
    n_dot_sigma = n[0] * SIGMA_X + n[1] * SIGMA_Y + n[2] * SIGMA_Z
    return math.cos(beta / 2.0) * SIGMA_0 - 1j * math.sin(beta / 2.0) * n_dot_sigma


def target_rotation(spec: GateSpec) -> np.ndarray:
    return rotation_from_axis_angle(spec.beta, spec.eta, spec.zeta)


def compile_rotation(spec: GateSpec, phases: PhaseRecord | float = 0.0) -> ControlParams:
    """Solve the target rotation for the control angles (theta, phi1, phi2).

    Only phi_B of the phase record enters; the spectator alphas never
    reach the logical block. The shared arctangent term is evaluated in
    two-argument form, atan2(cos(eta) sin(beta/2), cos(beta/2)), which
    stays on the branch that the composite-gate identity requires for
    beta >= pi.
    """
    phi_B = phases.phi_B if isinstance(phases, PhaseRecord) else float(phases)
    half = spec.beta / 2.0
    theta = 2.0 * math.asin(min(1.0, math.sin(spec.eta) * math.sin(half)))
    y, x = math.cos(spec.eta) * math.sin(half), math.cos(half)
    # At theta = pi both arguments vanish and chi is a pure global phase;
    # pick chi = 0 there, which is the convention the closed-form solution
    # quotes for the x rotation.
    chi = math.atan2(y, x) if math.hypot(y, x) > 1e-12 else 0.0
    phi1 = wrap_angle(chi - phi_B - spec.zeta + math.pi / 2.0)
    phi2 = wrap_angle(chi - phi_B + spec.zeta + math.pi / 2.0)
    return ControlParams(theta=theta, phi1=phi1, phi2=phi2)


def compose_sequence(
    order: SequenceOrder, cp: ControlParams, phases: PhaseRecord = PhaseRecord()
) -> np.ndarray:
    """Matrix product of the five ideal gates in the given order.

    In the alternative order the compiled phi1/phi2 are applied as the
    |1> phases of the P gates and the recorded alphas as the |E> phases
    (the two roles swap when the phase plateau moves below the B
    crossing); the logical block is identical either way.
    """
    b = gate_B(phases.phi_B)
    a = gate_A(cp.theta, phases.alpha_A)
    if order is SequenceOrder.STANDARD:
        p1 = gate_P(cp.phi1, phases.alpha_1)
        p2 = gate_P(cp.phi2, phases.alpha_2)
        return b @ p2 @ a @ p1 @ b
    p1 = gate_P(phases.alpha_1, cp.phi1)
    p2 = gate_P(phases.alpha_2, cp.phi2)
    return p2 @ b @ a @ b @ p1


def logical_block(u: np.ndarray):
    """Top-left 2x2 block of a 3x3 unitary and the leakage out of it.

    Leakage is 1 minus the smallest squared norm of the block-projected
    logical columns, so it vanishes exactly when the block is unitary.
    """
    block = np.array(u[:2, :2], dtype=complex)
    col_norms = np.sum(np.abs(block) ** 2, axis=0)
    return block, float(1.0 - min(col_norms))


def pauli_decompose(r: np.ndarray) -> np.ndarray:
    """Coefficients C_j with r = sum_j C_j sigma_j over (I, X, Y, Z)."""
    if r.shape != (2, 2):
        raise DimensionMismatch(f"expected a 2x2 matrix, got shape {r.shape}")
    return np.array([np.trace(s @ r) / 2.0 for s in PAULIS])


def pauli_reconstruct(coeffs) -> np.ndarray:
    return sum(c * s for c, s in zip(coeffs, PAULIS))


def equal_up_to_global_phase(u: np.ndarray, v: np.ndarray, tol: float = 1e-10):
    """Whether u = c*v for a unit phase c, plus the phase-aligned distance.

    The minimum of ||u - c v||_F over |c| = 1 has the closed form
    sqrt(||u||^2 + ||v||^2 - 2 |tr(v^dag u)|).
    """
    u = np.asarray(u, dtype=complex)
    v = np.asarray(v, dtype=complex)
    if u.shape != v.shape:
        raise DimensionMismatch(f"shape mismatch: {u.shape} vs {v.shape}")
    tr = np.trace(v.conj().T @ u)
    # Aligning with the phase of the trace minimizes the norm; forming the
    # difference explicitly avoids the cancellation the quadratic closed
    # form suffers when u and v are nearly identical.
    c = tr / abs(tr) if abs(tr) > 0.0 else 1.0
    distance = float(np.linalg.norm(u - c * v))
    return distance < tol, distance
