import math

import numpy as np
import pytest

from hybridpulse.model import (
    PAIR_A,
    PAIR_B,
    Anticrossings,
    HybridParams,
    NoDistinctMinimum,
    branch_gap,
    build_hamiltonian,
    find_anticrossings,
    spectrum,
)


def test_hamiltonian_zero_coupling_is_diagonal():
    p = HybridParams(E01=200.0, t1=0.0, t2=0.0)
    h = build_hamiltonian(p, 0.0)
    assert np.allclose(h, np.diag([0.0, 200.0, 0.0]))


def test_hamiltonian_entries_match_direct_substitution():
    t2 = math.sqrt(1.5) * 20.0  # independent of the constructor's ratio
    p = HybridParams.with_valley_ratio(200.0, 20.0)
    h = build_hamiltonian(p, -100.0)
    assert h[2, 2] == pytest.approx(100.0, abs=1e-14)
    assert h[0, 2] == pytest.approx(20.0, abs=1e-14)
    assert h[1, 2] == pytest.approx(-t2, abs=1e-12)
    assert h[1, 2] == pytest.approx(-24.4949, abs=1e-4)


def test_hamiltonian_hermitian_on_random_draws():
    rng = np.random.default_rng(11)
    for _ in range(100):
        p = HybridParams(
            E01=rng.uniform(10, 500),
            t1=rng.uniform(0, 50),
            t2=rng.uniform(0, 50),
        )
        h = build_hamiltonian(p, rng.uniform(-600, 300))
        assert np.array_equal(h, h.conj().T)


def test_valley_ratio_constructor_precision():
    p = HybridParams.with_valley_ratio(200.0, 17.3)
    assert abs(p.t2 / p.t1 - math.sqrt(1.5)) < 1e-12


@pytest.mark.parametrize("bad", [
    dict(E01=-1.0, t1=1.0, t2=1.0),
    dict(E01=0.0, t1=1.0, t2=1.0),
    dict(E01=10.0, t1=-0.5, t2=1.0),
    dict(E01=10.0, t1=1.0, t2=1.0, Gamma=-0.1),
    dict(E01=10.0, t1=1.0, t2=1.0, gamma=-0.1),
])
def test_invalid_params_rejected(bad):
    with pytest.raises(ValueError):
        HybridParams(**bad)


def test_spectrum_decoupled_limit_exact():
    p = HybridParams(E01=200.0, t1=0.0, t2=0.0)
    w, _ = spectrum(p, -50.0)
    assert np.allclose(w, [0.0, 50.0, 200.0], atol=1e-12)


def test_spectrum_splitting_at_crossing_a():
    p = HybridParams(E01=200.0, t1=20.0, t2=24.4949)
    w, _ = spectrum(p, 0.0)
    # Two-level estimate: the lowest pair splits by 2*t1 at the crossing.
    assert abs(w[1] - w[0] - 40.0) / 40.0 < 0.03


def test_eigenvectors_orthonormal():
    rng = np.random.default_rng(5)
    for _ in range(50):
        p = HybridParams(E01=rng.uniform(50, 400), t1=rng.uniform(0.1, 40), t2=rng.uniform(0.1, 40))
        _, v = spectrum(p, rng.uniform(-500, 200))
        assert np.linalg.norm(v.conj().T @ v - np.eye(3)) < 1e-12


def test_eigenvalues_continuous_in_detuning():
    # |dλ/dε| <= 1 (Hellmann-Feynman with dH/dε = diag(0, 0, -1)).
    rng = np.random.default_rng(9)
    delta = 1e-3
    for _ in range(50):
        p = HybridParams(E01=rng.uniform(50, 400), t1=rng.uniform(0.1, 40), t2=rng.uniform(0.1, 40))
        eps = rng.uniform(-500, 200)
        w1, _ = spectrum(p, eps)
        w2, _ = spectrum(p, eps + delta)
        assert np.all(np.abs(w2 - w1) <= 1.1 * delta)


def test_anticrossings_decoupled_limit_exact():
    p = HybridParams(E01=200.0, t1=1e-9, t2=1e-9)
    ac = find_anticrossings(p)
    assert ac.eps_A == pytest.approx(0.0, abs=1e-6)
    assert ac.eps_B == pytest.approx(-200.0, abs=1e-6)


def test_anticrossings_locations_and_gaps():
    p = HybridParams.with_valley_ratio(200.0, 20.0)
    ac = find_anticrossings(p)
    assert not ac.merged
    assert abs(ac.eps_A - 0.0) < 5.0
    assert abs(ac.eps_B + 200.0) < 5.0
    assert ac.eps_B < ac.eps_A
    assert ac.gap_A > 0 and ac.gap_B > 0


@pytest.mark.parametrize("t1", [2.0, 5.0, 10.0, 20.0])
def test_gap_a_is_twice_t1_for_moderate_coupling(t1):
    p = HybridParams.with_valley_ratio(200.0, t1)
    ac = find_anticrossings(p)
    assert abs(ac.gap_A - 2.0 * t1) / (2.0 * t1) < 0.05


def test_anticrossings_agree_with_dense_scan_oracle():
    p = HybridParams.with_valley_ratio(200.0, 20.0)
    ac = find_anticrossings(p)
    for pair, guess, found_eps, found_gap in (
        (PAIR_A, 0.0, ac.eps_A, ac.gap_A),
        (PAIR_B, -200.0, ac.eps_B, ac.gap_B),
    ):
        span = 4.0 * p.t2
        grid = np.arange(guess - span, guess + span, 0.01)
        gaps = [branch_gap(p, e, pair) for e in grid]
        k = int(np.argmin(gaps))
        assert abs(grid[k] - found_eps) < 0.02
        assert abs(gaps[k] - found_gap) < 1e-3


def test_merged_flag_and_strict_mode():
    p = HybridParams.with_valley_ratio(50.0, 20.0)
    ac = find_anticrossings(p)
    assert ac.merged
    with pytest.raises(NoDistinctMinimum):
        find_anticrossings(p, strict=True)


def test_precondition_couplings_below_half_splitting():
    p = HybridParams(E01=50.0, t1=30.0, t2=30.0)
    with pytest.raises(ValueError):
        find_anticrossings(p)
