import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import concurrence_eigvals, fef_bruteforce, random_density_matrix, random_unitary_2, werner, werner_concurrence
from xxquench.entanglement import (
    MAGIC_BASIS,
    concurrence,
    entanglement_report,
    fully_entangled_fraction,
    measure_series,
    teleportation_fidelity,
)
from xxquench.rdm import TwoSpinDensityMatrix

SINGLET = np.array([0, 1, -1, 0]) / math.sqrt(2)


def proj(v):
    v = np.asarray(v, dtype=complex)
    return np.outer(v, v.conj())


def test_singlet_concurrence():
    assert concurrence(proj(SINGLET)) == pytest.approx(1, abs=1e-12)


@pytest.mark.parametrize("seed", range(5))
def test_product_states_have_zero_concurrence(seed):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=2) + 1j * rng.normal(size=2)
    b = rng.normal(size=2) + 1j * rng.normal(size=2)
    v = np.kron(a / np.linalg.norm(a), b / np.linalg.norm(b))
    assert concurrence(proj(v)) < 1e-7


@pytest.mark.parametrize("p,expected", [(0.8, 0.7), (1 / 3, 0.0), (1.0, 1.0), (0.0, 0.0)])
def test_werner_concurrence(p, expected):
    assert abs(concurrence(werner(p)) - expected) < 1e-9
    assert abs(werner_concurrence(p) - expected) < 1e-12


def test_magic_basis_is_unitary_and_maximally_entangled():
    np.testing.assert_allclose(MAGIC_BASIS.conj().T @ MAGIC_BASIS, np.eye(4), atol=1e-15)
    for col in MAGIC_BASIS.T:
        assert concurrence(proj(col)) == pytest.approx(1, abs=1e-12)
        assert fully_entangled_fraction(proj(col)) == pytest.approx(1, abs=1e-12)


def test_fef_examples():
    assert fully_entangled_fraction(np.eye(4) / 4) == pytest.approx(0.25, abs=1e-15)
    assert fully_entangled_fraction(np.diag([0, 1, 0, 0])) == pytest.approx(0.5, abs=1e-15)


@pytest.mark.parametrize("seed", range(4))
def test_fef_of_locally_rotated_bell_state_is_one(seed):
    rng = np.random.default_rng(seed)
    u = np.kron(random_unitary_2(rng), random_unitary_2(rng))
    assert fully_entangled_fraction(proj(u @ SINGLET)) == pytest.approx(1, abs=1e-12)


@pytest.mark.parametrize("seed", range(10))
def test_fef_matches_bruteforce(seed):
    rho = random_density_matrix(np.random.default_rng(seed))
    assert abs(fully_entangled_fraction(rho) - fef_bruteforce(rho)) < 1e-6


@pytest.mark.parametrize("seed", range(10))
def test_concurrence_matches_eigvals_route(seed):
    rho = random_density_matrix(np.random.default_rng(100 + seed), rank=int(seed % 4) + 1)
    assert abs(concurrence(rho) - concurrence_eigvals(rho)) < 1e-7


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=30, deadline=None)
def test_local_unitary_invariance(seed):
    rng = np.random.default_rng(seed)
    rho = random_density_matrix(rng)
    u = np.kron(random_unitary_2(rng), random_unitary_2(rng))
    rot = u @ rho @ u.conj().T
    assert abs(concurrence(rot) - concurrence(rho)) < 1e-9
    assert abs(fully_entangled_fraction(rot) - fully_entangled_fraction(rho)) < 1e-9


@given(st.floats(0, 0.5), st.floats(0, 0.5), st.floats(0, 0.5), st.floats(0, 1), st.floats(0, 2 * math.pi))
@settings(max_examples=60, deadline=None)
def test_x_state_closed_form(a, ap, b, frac, phase):
    bp = 1.0 - a - ap - b
    if bp < 0:
        return
    z = frac * math.sqrt(b * bp) * np.exp(1j * phase)
    rho = np.diag([a, b, bp, ap]).astype(complex)
    rho[1, 2], rho[2, 1] = z, np.conj(z)
    expected = 2 * max(0.0, abs(z) - math.sqrt(a * ap))
    assert abs(concurrence(rho) - expected) < 1e-7


def test_fidelity_examples():
    assert teleportation_fidelity(1.0) == 1.0
    assert teleportation_fidelity(0.25) == 0.5
    assert teleportation_fidelity(0.78) == pytest.approx(0.85333333333, abs=1e-10)
    with pytest.raises(ValueError):
        teleportation_fidelity(1.5)
    with pytest.raises(ValueError):
        teleportation_fidelity(-0.1)


def test_non_psd_rejected():
    bad = np.diag([1.1, -0.1, 0, 0])
    with pytest.raises(ValueError):
        concurrence(bad)
    with pytest.raises(ValueError):
        fully_entangled_fraction(bad)


def test_report_and_batches():
    rho = TwoSpinDensityMatrix(werner(0.9), time=2.0)
    rep = entanglement_report(rho, rho.time)
    assert rep.distillable
    assert rep.fidelity == pytest.approx((2 * rep.fef + 1) / 3)
    stack = np.stack([werner(p) for p in (0.0, 0.5, 1.0)])
    m = measure_series(stack)
    np.testing.assert_allclose(m["concurrence"], [0, 0.25, 1], atol=1e-9)
    np.testing.assert_allclose(m["fef"], [0.25, 0.625, 1], atol=1e-12)
    assert not entanglement_report(np.eye(4) / 4).distillable
