import numpy as np
import pytest

from xxquench.jacobi import EigensolverError, jacobi_eigh
from xxquench.lattice import ChainSpec, CouplingProfile


@pytest.mark.parametrize("n", [1, 2, 3, 8, 40])
def test_matches_lapack_on_random_symmetric(n):
    rng = np.random.default_rng(n)
    a = rng.normal(size=(n, n))
    a = a + a.T
    w, v = jacobi_eigh(a)
    np.testing.assert_allclose(w, np.linalg.eigvalsh(a), atol=1e-12)
    np.testing.assert_allclose(a @ v, v * w, atol=1e-12)
    np.testing.assert_allclose(v.T @ v, np.eye(n), atol=1e-12)


def test_uniform_chain_spectrum():
    n = 30
    w, _ = jacobi_eigh(ChainSpec(n, 1.0).uniform().hopping_matrix())
    expected = np.sort(2 * np.cos(np.pi * np.arange(1, n + 1) / (n + 1)))
    np.testing.assert_allclose(w, expected, atol=1e-10)


def test_degenerate_and_decoupled_blocks():
    a = CouplingProfile((1.0, 0.0, 1.0)).hopping_matrix()
    w, v = jacobi_eigh(a)
    np.testing.assert_allclose(w, [-1, -1, 1, 1], atol=1e-14)
    np.testing.assert_allclose(a @ v, v * w, atol=1e-14)


def test_rejects_non_symmetric():
    with pytest.raises(ValueError):
        jacobi_eigh([[0.0, 1.0], [0.0, 0.0]])


def test_non_convergence_reports_diagnostics():
    rng = np.random.default_rng(0)
    a = rng.normal(size=(6, 6))
    with pytest.raises(EigensolverError) as info:
        jacobi_eigh(a + a.T, max_sweeps=1, tol=1e-15)
    assert info.value.sweeps == 1
    assert info.value.off_norm > 0
    assert "sweeps=1" in str(info.value)
