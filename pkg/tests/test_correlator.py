import itertools
import math
import time

import numpy as np
import pytest

from xxquench.correlator import (
    FermionWord,
    bell_correlation_matrices,
    c,
    cdag,
    dynamic_moment_naive,
    dynamic_moment_series,
    dynamic_moment_transfer,
    static_moment,
    static_moment_bell,
    word,
)
from xxquench.lattice import BellPairStateSpec, ChainSpec, ProductStateSpec, canted_state, neel_state
from xxquench.oracle import bell_full_state, build_hamiltonian, ed_word_moment, product_full_state
from xxquench.propagator import analytic_propagator, analytic_series, numeric_propagator


def random_state(rng, n):
    return ProductStateSpec(tuple(rng.uniform(0, 2 * math.pi, n)))


def test_word_length_limit():
    with pytest.raises(ValueError):
        word(c(1), c(2), c(3), c(4), c(5))


def test_word_site_bounds():
    with pytest.raises(ValueError):
        static_moment(word(c(5, False)), neel_state(4))


def test_static_requires_static_word():
    with pytest.raises(ValueError):
        static_moment(word(c(1)), neel_state(4))


@pytest.mark.parametrize("seed", range(5))
def test_static_occupation(seed):
    rng = np.random.default_rng(seed)
    s = random_state(rng, 6)
    for l in range(1, 7):
        got = static_moment(word(cdag(l, False), c(l, False)), s)
        assert abs(got - math.cos(s.angles[l - 1] / 2) ** 2) < 1e-14


@pytest.mark.parametrize("l", [1, 3, 6])
def test_static_pair_same_site_vanishes(l):
    s = random_state(np.random.default_rng(l), 6)
    assert static_moment(word(c(l, False), c(l, False), string=True), s) == 0


@pytest.mark.parametrize("alpha,l,m", [(0.7, 4, 2), (2.3, 6, 1), (4.0, 5, 4)])
def test_static_pair_magnitude_and_phase(alpha, l, m):
    n = 6
    s = canted_state(n, alpha)
    th = np.array(s.angles)
    w = word(c(l, False), c(m, False), string=True)
    got = static_moment(w, s)
    mag = 0.25 * math.sin(th[l - 1]) * math.sin(th[m - 1])
    mag *= np.prod(np.cos(th[: m - 1])) * np.prod(np.cos(th[l:]))
    assert abs(abs(got) - abs(mag)) < 1e-14
    assert abs(got - ed_word_moment(w, product_full_state(s))) < 1e-14


def test_bell_static_examples():
    pairs = BellPairStateSpec(2)
    assert static_moment_bell(word(cdag(3, False), c(3, False)), pairs) == 0.5
    assert static_moment_bell(word(cdag(2, False), c(3, False)), pairs) == 0
    assert static_moment_bell(word(c(1, False), cdag(1, False), string=True), pairs) == 0.5


def test_bell_static_unsupported_shape():
    with pytest.raises(ValueError):
        static_moment_bell(word(c(1, False), c(2, False)), BellPairStateSpec(2))


@pytest.mark.parametrize("n_pairs", [1, 2, 3, 4])
def test_bell_correlation_matrices_match_ed(n_pairs):
    pairs = BellPairStateSpec(n_pairs)
    n = pairs.n_sites
    psi = bell_full_state(pairs)
    cmat, gmat = bell_correlation_matrices(pairs)
    for l, m in itertools.product(range(1, n + 1), repeat=2):
        ref_c = ed_word_moment(word(cdag(l, False), c(m, False)), psi)
        ref_g = ed_word_moment(word(c(l, False), cdag(m, False), string=True), psi)
        assert abs(cmat[l - 1, m - 1] - ref_c) < 1e-14
        assert abs(gmat[l - 1, m - 1] - ref_g) < 1e-14


@pytest.mark.parametrize("t", [0.0, 0.8, 5.0])
def test_all_up_occupation_is_stationary(t):
    s = canted_state(7, 0.0)
    prop = analytic_propagator(ChainSpec(7), t)
    w = word(cdag(1), c(1))
    assert abs(dynamic_moment_naive(w, s, prop) - 1) < 1e-12
    assert abs(dynamic_moment_transfer(w, s, prop) - 1) < 1e-12


def test_neel_pair_term_vanishes():
    n = 8
    prop = analytic_propagator(ChainSpec(n), 2.1)
    w = word(c(1), c(n), string=True)
    assert abs(dynamic_moment_transfer(w, neel_state(n), prop)) < 1e-14
    assert abs(dynamic_moment_naive(w, neel_state(n), prop)) < 1e-14


def test_naive_matches_ed_occupation():
    n, t = 8, 1.3
    prof = ChainSpec(n).uniform()
    w = word(cdag(1), c(1))
    ref = ed_word_moment(w, product_full_state(neel_state(n)), build_hamiltonian(prof), t, prof)
    got = dynamic_moment_naive(w, neel_state(n), analytic_propagator(ChainSpec(n), t))
    assert abs(got - ref) < 1e-10


def _words(sites, max_len=4):
    rng = np.random.default_rng(len(sites))
    for length in range(max_len + 1):
        for _ in range(6):
            factors = [_random_factor(rng, sites) for _ in range(length)]
            yield FermionWord(tuple(factors), bool(rng.integers(2)))


def _random_factor(rng, sites):
    return (cdag if rng.integers(2) else c)(int(rng.choice(sites)), evolved=bool(rng.integers(4)))


@pytest.mark.parametrize("n", [4, 6, 8])
@pytest.mark.parametrize("draw", range(20))
def test_transfer_matches_naive(n, draw):
    rng = np.random.default_rng(1000 * n + draw)
    s = random_state(rng, n)
    prop = analytic_propagator(ChainSpec(n, rng.uniform(0.5, 2)), rng.uniform(0, 10))
    for w in _words(list(range(1, n + 1))):
        assert abs(dynamic_moment_transfer(w, s, prop) - dynamic_moment_naive(w, s, prop)) < 1e-10, str(w)


@pytest.mark.parametrize("n", [4, 6])
def test_transfer_matches_ed_for_evolved_words(n):
    rng = np.random.default_rng(n)
    prof = ChainSpec(n).uniform()
    h = build_hamiltonian(prof)
    s = random_state(rng, n)
    psi = product_full_state(s)
    t = 1.9
    prop = analytic_propagator(ChainSpec(n), t)
    for sites in itertools.product(range(1, n + 1), repeat=2):
        for daggers in itertools.product([False, True], repeat=2):
            for string in (False, True):
                w = FermionWord(tuple((cdag if d else c)(l) for l, d in zip(sites, daggers)), string)
                ref = ed_word_moment(w, psi, h, t, prof)
                assert abs(dynamic_moment_transfer(w, s, prop) - ref) < 1e-12, str(w)


def test_series_matches_pointwise():
    n = 10
    s = canted_state(n, 2.0)
    times = np.linspace(0, 5, 7)
    series = analytic_series(ChainSpec(n), times)
    w = word(cdag(1), c(n), cdag(n), c(1))
    got = dynamic_moment_series(w, s, series, chunk=3)
    for i, t in enumerate(times):
        assert abs(got[i] - dynamic_moment_transfer(w, s, analytic_propagator(ChainSpec(n), t))) < 1e-13


def test_adjoint_word_conjugates():
    rng = np.random.default_rng(7)
    n = 6
    s = random_state(rng, n)
    prop = numeric_propagator(ChainSpec(n).uniform(), 2.4)
    for w in [word(cdag(1), c(3)), word(c(1), c(6), string=True), word(cdag(2), c(5), cdag(4), c(1))]:
        adj = w.adjoint_reversed()
        sign = (-1) ** len(w) if w.global_string else 1
        lhs = dynamic_moment_transfer(adj, s, prop)
        rhs = sign * np.conj(dynamic_moment_transfer(w, s, prop))
        assert abs(lhs - rhs) < 1e-12, str(w)


@pytest.mark.parametrize("seed", range(5))
def test_odd_length_words_vanish_on_sz_eigenstates(seed):
    rng = np.random.default_rng(seed)
    n = 6
    s = ProductStateSpec(tuple(rng.choice([0.0, math.pi], n)))
    prop = analytic_propagator(ChainSpec(n), 1.5)
    for w in [word(c(2)), word(cdag(1), c(2), cdag(3)), word(c(1), string=True)]:
        assert dynamic_moment_transfer(w, s, prop) == pytest.approx(0, abs=1e-15)


def test_dimension_mismatch():
    with pytest.raises(ValueError):
        dynamic_moment_transfer(word(c(1)), neel_state(4), analytic_propagator(ChainSpec(6), 1.0))


@pytest.mark.slow
def test_quartic_word_benchmark_n50():
    n = 50
    s = neel_state(n)
    prop = analytic_propagator(ChainSpec(n), 12.5)
    w = word(cdag(1), c(1), cdag(n), c(n))
    dynamic_moment_transfer(w, s, prop)
    reps = 50
    start = time.perf_counter()
    for _ in range(reps):
        dynamic_moment_transfer(w, s, prop)
    per_eval = (time.perf_counter() - start) / reps
    # a few ms per evaluation, dominated by numpy call overhead
    assert per_eval < 0.05
