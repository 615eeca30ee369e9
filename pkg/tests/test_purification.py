import itertools

import numpy as np
import pytest

from channel_ergodics import (
    EnumerationBudgetError,
    KrausAtom,
    KrausMeasure,
    NotStochasticError,
    purification_scan,
    purifies_at_depth,
    wedge2_decay,
    wedge_norm,
    y_process_diagnostic,
)
from channel_ergodics.linalg import haar_unitary


def brute_force_d_n(km, depth):
    """Independent oracle: enumerate all words with itertools and sum the
    weighted wedge-2 norms of the explicitly multiplied products."""
    total = 0.0
    for word in itertools.product(range(len(km)), repeat=depth):
        w = np.eye(km.dim, dtype=complex)
        mass = 1.0
        for a in word:
            w = km.matrices[a] @ w
            mass *= km.weights[a]
        total += mass * wedge_norm(w, 2)
    return total


def test_purifies_markov_identity_projector(markov_km):
    res = purifies_at_depth(markov_km, np.eye(2), 1)
    assert res.purifies
    assert res.witness_word is not None
    # every V_ij witnesses: W†W = p_ij |j><j| is rank one, not prop. to Id
    a = res.witness_word[0]
    m = markov_km.matrices[a]
    g = m.conj().T @ m
    assert np.linalg.matrix_rank(g) == 1


def test_purifies_unitary_never(unitary_km):
    for depth in (1, 2, 3):
        res = purifies_at_depth(unitary_km, np.eye(2), depth)
        assert not res.purifies


def test_purifies_diagonal_two_atom_never(diagonal_two_atom_km):
    # all products are diagonal with equal-modulus entries: W†W prop. to Id
    for depth in range(1, 6):
        assert not purifies_at_depth(diagonal_two_atom_km, np.eye(2), depth).purifies


def test_purifies_monotone_in_depth(markov_km, random_purifying_km):
    for km in (markov_km, random_purifying_km):
        first = None
        for depth in (1, 2, 3):
            if purifies_at_depth(km, np.eye(km.dim), depth).purifies:
                first = depth
                break
        assert first is not None
        for depth in range(first, first + 3):
            assert purifies_at_depth(km, np.eye(km.dim), depth).purifies


def test_purifies_unitary_conjugation_covariance(random_purifying_km):
    km = random_purifying_km
    rng = np.random.default_rng(8)
    q = haar_unitary(km.dim, rng)
    km_q = KrausMeasure.from_arrays(
        np.array([q @ m @ q.conj().T for m in km.matrices]), km.weights
    )
    pi = np.diag([1.0, 1.0]).astype(complex)  # rank-2 projector (k = 2)
    for depth in (1, 2):
        a = purifies_at_depth(km, pi, depth).purifies
        b = purifies_at_depth(km_q, q @ pi @ q.conj().T, depth).purifies
        assert a == b


def test_purifies_validates_input(markov_km):
    with pytest.raises(ValueError):
        purifies_at_depth(markov_km, np.diag([1.0, 0.0]), 1)  # rank 1
    with pytest.raises(ValueError):
        purifies_at_depth(markov_km, np.eye(2), 0)
    with pytest.raises(EnumerationBudgetError):
        purifies_at_depth(markov_km, np.eye(2), 11, budget=10**6)


def test_scan_markov(markov_km):
    scan = purification_scan(markov_km, max_depth=2, seed=0)
    assert scan.verdict == "purifying-evidence"
    assert all(c.purifying_depth is not None and c.purifying_depth <= 2 for c in scan.candidates)


def test_scan_unitary(unitary_km):
    scan = purification_scan(unitary_km, max_depth=3, seed=0)
    assert scan.verdict == "non-purifying-witness"
    assert all(c.purifying_depth is None for c in scan.candidates)


def test_scan_diagonal_two_atom(diagonal_two_atom_km):
    scan = purification_scan(diagonal_two_atom_km, max_depth=4, seed=0)
    assert scan.verdict == "non-purifying-witness"
    assert any(c.origin.startswith("coords") for c in scan.survivors)


def test_wedge2_markov_exact_zero(markov_km):
    decay = wedge2_decay(markov_km, max_exact_depth=5)
    assert np.all(decay.d_exact == 0.0)  # every product has rank <= 1
    assert decay.slope == float("-inf")
    assert decay.verdict == "purifying-evidence"


def test_wedge2_unitary_constant_one(unitary_km):
    decay = wedge2_decay(unitary_km, max_exact_depth=6)
    assert decay.d_exact == pytest.approx(np.ones(6), abs=1e-12)
    assert decay.slope == pytest.approx(0.0, abs=1e-12)
    assert decay.verdict == "non-purifying-witness"


def test_wedge2_exact_matches_brute_force_oracle(random_purifying_km):
    decay = wedge2_decay(random_purifying_km, max_exact_depth=5)
    for n in range(1, 6):
        assert decay.d_exact[n - 1] == pytest.approx(
            brute_force_d_n(random_purifying_km, n), rel=1e-10
        )


def test_wedge2_random_channel_decays_with_mc_agreement(random_purifying_km):
    decay = wedge2_decay(random_purifying_km, max_exact_depth=8, mc_depth=8, n_paths=3000, seed=4)
    d = decay.d_exact
    assert np.all(np.diff(d[1:]) < 0)  # strictly decreasing from n = 2
    assert decay.verdict == "purifying-evidence"
    assert decay.slope < 0
    # exact and Monte Carlo agree within 3 standard errors at overlapping depths
    for n in range(1, 9):
        se = max(decay.d_mc_stderr[n - 1], 1e-12)
        assert abs(decay.d_mc[n - 1] - d[n - 1]) <= 3 * se


def test_wedge2_requires_stochastic():
    km = KrausMeasure([KrausAtom(1.0, 2.0 * np.eye(2))])
    with pytest.raises(NotStochasticError):
        wedge2_decay(km, max_exact_depth=3)


def test_y_process_markov_rank_one(markov_km):
    rep = y_process_diagnostic(markov_km, depth=3, n_paths=50, seed=0)
    assert np.max(rep.ratios) <= 1e-12  # a2(Y_n) = 0 on every path
    assert rep.martingale_deviation <= 1e-10


def test_y_process_unitary_stays_mixed(unitary_km):
    rep = y_process_diagnostic(unitary_km, depth=10, n_paths=20, seed=1)
    assert rep.ratios == pytest.approx(np.ones(20), abs=1e-12)  # Y_n = Id/k always
    assert rep.martingale_deviation <= 1e-10


def test_y_process_purifying_collapses(random_purifying_km):
    rep = y_process_diagnostic(random_purifying_km, depth=50, n_paths=200, seed=2)
    assert rep.median_ratio < 1e-4
    assert rep.martingale_deviation <= 1e-10


def test_y_process_trace_one(random_purifying_km):
    # Y_n has unit trace on every non-degenerate path by construction
    from channel_ergodics.purification import _y_matrix

    rng = np.random.default_rng(3)
    w = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
    assert np.trace(_y_matrix(w)).real == pytest.approx(1.0, abs=1e-14)


def test_y_process_consistent_with_wedge2(random_purifying_km):
    # median a2/a1 of Y_50 should be far below the depth-8 wedge-2 level
    decay = wedge2_decay(random_purifying_km, max_exact_depth=8)
    rep = y_process_diagnostic(random_purifying_km, depth=50, n_paths=100, seed=5)
    assert rep.median_ratio < decay.d_exact[-1]
