"""Three-level model of a double-dot hybrid qubit.

The basis order is fixed everywhere in this package: index 0 is the
logical |0>, index 1 the logical |1>, index 2 the excited charge state
|E>. Energies are in ueV, times in ns, rates in 1/ns; the detuning eps
enters the Hamiltonian as -eps on the |E> diagonal, so the |0>-|E>
crossing sits near eps = 0 and the |1>-|E> crossing near eps = -E01.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .search import golden_minimize

HBAR = 0.6582119569  # ueV * ns

#: t2/t1 when both electrons occupy ground-state single-particle orbitals.
VALLEY_RATIO = math.sqrt(1.5)

LEVELS = ("0L", "1L", "E")

# Bare-state index pairs forming the two avoided crossings.
PAIR_A = (0, 2)  # |0>_L with |E>
PAIR_B = (1, 2)  # |1>_L with |E>


class NoDistinctMinimum(RuntimeError):
    """Raised in strict mode when the two avoided crossings have merged."""


def _require(cond, message):
    if not cond:
        raise ValueError(message)


@dataclass(frozen=True)
class HybridParams:
    """Static parameters of one hybrid qubit.

    E01 is the logical splitting, t1/t2 the tunnel couplings of |0>/|1>
    to |E>, Gamma the charge dephasing rate (any coherence with |E>) and
    gamma the dephasing rate of the logical 0-1 coherence.
    """

    E01: float
    t1: float
    t2: float
    Gamma: float = 0.2
    gamma: float = 1e-3
    hbar: float = HBAR

    def __post_init__(self):
        _require(math.isfinite(self.E01) and self.E01 > 0, f"E01 must be > 0, got {self.E01}")
        _require(math.isfinite(self.t1) and self.t1 >= 0, f"t1 must be >= 0, got {self.t1}")
        _require(math.isfinite(self.t2) and self.t2 >= 0, f"t2 must be >= 0, got {self.t2}")
        _require(self.Gamma >= 0, f"Gamma must be >= 0, got {self.Gamma}")
        _require(self.gamma >= 0, f"gamma must be >= 0, got {self.gamma}")

    @classmethod
    def with_valley_ratio(cls, E01, t1, Gamma=0.2, gamma=1e-3):
        """Construct with the fixed excited-state ratio t2 = sqrt(3/2) * t1."""
        return cls(E01=E01, t1=t1, t2=VALLEY_RATIO * t1, Gamma=Gamma, gamma=gamma)


@dataclass(frozen=True)
class Anticrossings:
    """Locations and minimal gaps of the two avoided crossings.

    eps_B < eps_A always; ``merged`` flags the regime where the two gap
    minima are no longer separated by more than their combined widths.
    """

    eps_A: float
    eps_B: float
    gap_A: float
    gap_B: float
    merged: bool = False


def build_hamiltonian(p: HybridParams, eps: float) -> np.ndarray:
    """3x3 Hamiltonian at detuning eps, in the fixed (|0>, |1>, |E>) basis."""
    return np.array(
        [
            [0.0, 0.0, p.t1],
            [0.0, p.E01, -p.t2],
            [p.t1, -p.t2, -eps],
        ],
        dtype=complex,
    )


def spectrum(p: HybridParams, eps: float):
    """Eigenvalues (ascending) and orthonormal eigenvector columns at eps."""
    return np.linalg.eigh(build_hamiltonian(p, eps))


def branch_gap(p: HybridParams, eps: float, pair) -> float:
    """Spacing of the two adiabatic branches tied to a bare-state pair.

    The branches are picked at each eps as the two eigenvectors with the
    largest combined weight on the bare pair, which avoids index-swap
    artifacts as levels reorder across a crossing.
    """
    w, v = spectrum(p, eps)
    weight = np.abs(v[pair[0], :]) ** 2 + np.abs(v[pair[1], :]) ** 2
    i, j = np.argsort(weight)[-2:]
    return abs(w[i] - w[j])


def dressed_index(p: HybridParams, eps: float, bare_index: int) -> int:
    """Index of the eigenvalue whose eigenvector is closest to a bare state."""
    _, v = spectrum(p, eps)
    return int(np.argmax(np.abs(v[bare_index, :]) ** 2))


def dressed_splitting(p: HybridParams, eps: float, bare_i: int, bare_j: int) -> float:
    """Energy difference E_j - E_i of the dressed levels nearest two bare states."""
    w, v = spectrum(p, eps)
    weights = np.abs(v) ** 2
    i = int(np.argmax(weights[bare_i, :]))
    j = int(np.argmax(weights[bare_j, :]))
    return float(w[j] - w[i])


def _locate_minimum(p, pair, guess, span, xtol):
    """Golden-section search of branch_gap around guess; recenters if the
    minimum lands on a bracket edge. Returns (eps, gap, hit_edge)."""
    f = lambda e: branch_gap(p, e, pair)
    center = guess
    for _ in range(8):
        a, b = center - span, center + span
        x, g = golden_minimize(f, a, b, xtol=xtol)
        margin = 0.02 * (b - a)
        if x - a > margin and b - x > margin:
            return x, g, False
        center = a if x - a <= margin else b
    return x, g, True


def find_anticrossings(p: HybridParams, *, xtol=1e-6, strict=False) -> Anticrossings:
    """Locate both avoided crossings and their minimal gaps.

    Each crossing is found by 1-D golden-section minimization of the
    branch spacing, bracketed around the bare crossing point. When the
    couplings are large enough that the two minima merge (separation
    below the summed gaps, or a minimum escaping its bracket), the result
    is flagged ``merged``; with strict=True that raises NoDistinctMinimum
    instead.
    """
    _require(p.t1 < p.E01 / 2, f"t1 = {p.t1} must be below E01/2 = {p.E01 / 2}")
    _require(p.t2 < p.E01 / 2, f"t2 = {p.t2} must be below E01/2 = {p.E01 / 2}")

    span = 4.0 * max(p.t1, p.t2)
    if span == 0.0:
        # Decoupled limit: the diagonal levels cross exactly.
        return Anticrossings(eps_A=0.0, eps_B=-p.E01, gap_A=0.0, gap_B=0.0)

    eps_a, gap_a, edge_a = _locate_minimum(p, PAIR_A, 0.0, span, xtol)
    eps_b, gap_b, edge_b = _locate_minimum(p, PAIR_B, -p.E01, span, xtol)
    eps_a, gap_a = float(eps_a), float(gap_a)
    eps_b, gap_b = float(eps_b), float(gap_b)

    merged = bool(
        edge_a
        or edge_b
        or eps_b >= eps_a
        or (eps_a - eps_b) < (gap_a + gap_b)
    )
    if strict and merged:
        raise NoDistinctMinimum(
            f"avoided crossings overlap for t1={p.t1}, t2={p.t2}, E01={p.E01}"
        )
    return Anticrossings(eps_A=eps_a, eps_B=eps_b, gap_A=gap_a, gap_B=gap_b, merged=merged)
