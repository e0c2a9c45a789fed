"""Brute-force exact diagonalization on the full 2**N Hilbert space.

Bit convention: site 1 is the most significant bit of the basis index and
spin up is bit value 0, so for N = 2 the basis order is
``|up up>, |up down>, |down up>, |down down>``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import expm_multiply

from .correlator import MINUS_SZ, SIGMA_MINUS, SIGMA_PLUS, FermionWord
from .lattice import BellPairStateSpec, CouplingProfile, MixtureSpec, ProductStateSpec
from .rdm import TwoSpinDensityMatrix

MAX_SITES = 14
MAX_DENSE_SITES = 12

SX = np.array([[0.0, 1.0], [1.0, 0.0]])
SY = np.array([[0.0, -1j], [1j, 0.0]])
SZ = np.diag([1.0, -1.0])


@dataclass(frozen=True, eq=False)
class FullState:
    amplitudes: np.ndarray

    def __post_init__(self):
        psi = np.asarray(self.amplitudes, dtype=complex)
        n = int(round(np.log2(psi.size)))
        if psi.ndim != 1 or 2**n != psi.size:
            raise ValueError("amplitude vector length must be a power of two")
        if abs(np.linalg.norm(psi) - 1.0) > 1e-12:
            raise ValueError("state is not normalized")
        object.__setattr__(self, "amplitudes", psi)

    @property
    def n_sites(self) -> int:
        return int(round(np.log2(self.amplitudes.size)))


def _check_size(n: int) -> None:
    if n > MAX_SITES:
        raise ValueError(f"exact diagonalization is capped at N={MAX_SITES}, got N={n}")


def site_operator(op: np.ndarray, site: int, n: int) -> sp.csr_matrix:
    """Embed a 2x2 operator at ``site`` (1-based) of an N-site chain."""
    return sp.kron(
        sp.kron(sp.identity(2 ** (site - 1), format="csr"), sp.csr_matrix(op)),
        sp.identity(2 ** (n - site), format="csr"),
        format="csr",
    )


def build_hamiltonian(profile: CouplingProfile, delta_aniso: float = 0.0) -> sp.csr_matrix:
    """``sum_k (J_k/2)(sx sx + sy sy + Delta sz sz)`` on an open chain."""
    n = profile.n_sites
    _check_size(n)
    dim = 2**n
    h = sp.csr_matrix((dim, dim), dtype=complex)
    for k, jk in enumerate(profile.bonds, start=1):
        for op, scale in ((SX, 1.0), (SY, 1.0), (SZ, delta_aniso)):
            if scale:
                h = h + 0.5 * jk * scale * (site_operator(op, k, n) @ site_operator(op, k + 1, n))
    return h.tocsr()


def product_full_state(state: ProductStateSpec) -> FullState:
    psi = np.ones(1)
    for a in state.amplitudes():
        psi = np.kron(psi, a)
    return FullState(psi)


def bell_full_state(pairs: BellPairStateSpec) -> FullState:
    singlet = np.array([0.0, 1.0, -1.0, 0.0]) / np.sqrt(2.0)
    psi = np.ones(1)
    for _ in range(pairs.n_pairs):
        psi = np.kron(psi, singlet)
    return FullState(psi)


@lru_cache(maxsize=8)
def _dense_eigh(profile: CouplingProfile, delta_aniso: float):
    h = build_hamiltonian(profile, delta_aniso).toarray()
    return np.linalg.eigh(h)


def ed_evolve(state: FullState, h, t: float, profile: CouplingProfile | None = None, delta_aniso: float = 0.0) -> FullState:
    """``exp(-i H t) |psi>``.

    With ``profile`` given and N <= 12 the cached dense eigendecomposition of
    that Hamiltonian is reused; otherwise ``h`` is diagonalized (dense) or,
    above the dense cap, applied through a sparse Krylov exponential.
    """
    n = state.n_sites
    psi = state.amplitudes
    if n <= MAX_DENSE_SITES:
        if profile is not None:
            w, v = _dense_eigh(profile, delta_aniso)
        else:
            w, v = np.linalg.eigh(h.toarray() if sp.issparse(h) else np.asarray(h))
        out = v @ (np.exp(-1j * w * t) * (v.conj().T @ psi))
    else:
        out = expm_multiply(-1j * t * sp.csr_matrix(h), psi)
    return FullState(out / np.linalg.norm(out))


def ed_rdm_ends(state: FullState, time: float = 0.0) -> TwoSpinDensityMatrix:
    """Partial trace over sites 2..N-1."""
    n = state.n_sites
    if n < 2:
        raise ValueError("need at least two sites")
    psi = state.amplitudes.reshape(2, 2 ** (n - 2), 2)
    rho = np.einsum("aib,cid->abcd", psi, psi.conj()).reshape(4, 4)
    return TwoSpinDensityMatrix(rho, time)


def _initial_full_states(init) -> list[tuple[float, FullState]]:
    if isinstance(init, ProductStateSpec):
        return [(1.0, product_full_state(init))]
    if isinstance(init, BellPairStateSpec):
        return [(1.0, bell_full_state(init))]
    if isinstance(init, MixtureSpec):
        return [(w, product_full_state(s)) for w, s in init.components]
    raise TypeError(f"unsupported initial state {type(init).__name__}")


def ed_rdm(init, profile: CouplingProfile, t: float, delta_aniso: float = 0.0) -> TwoSpinDensityMatrix:
    """End-spin RDM of a pure, Bell-pair or mixed initial state evolved to time t."""
    _check_size(profile.n_sites)
    h = build_hamiltonian(profile, delta_aniso)
    rho = np.zeros((4, 4), dtype=complex)
    for weight, psi in _initial_full_states(init):
        if psi.n_sites != profile.n_sites:
            raise ValueError("state and coupling profile sizes differ")
        evolved = ed_evolve(psi, h, t, profile, delta_aniso)
        rho += weight * ed_rdm_ends(evolved).entries
    return TwoSpinDensityMatrix(rho, t)


def fermion_operator(site: int, dagger: bool, n: int) -> sp.csr_matrix:
    """Jordan-Wigner operator ``S_{1,site-1} sigma^(-/+)_site`` as a sparse matrix."""
    op = sp.identity(1, format="csr")
    for k in range(1, n + 1):
        if k < site:
            local = MINUS_SZ
        elif k == site:
            local = SIGMA_PLUS if dagger else SIGMA_MINUS
        else:
            local = np.eye(2)
        op = sp.kron(op, sp.csr_matrix(local), format="csr")
    return op


def parity_string(n: int) -> sp.csr_matrix:
    op = sp.identity(1, format="csr")
    for _ in range(n):
        op = sp.kron(op, sp.csr_matrix(MINUS_SZ), format="csr")
    return op


def ed_word_moment(w: FermionWord, state: FullState, h=None, t: float = 0.0, profile: CouplingProfile | None = None) -> complex:
    """``<w>`` with all operators either static or all evolved (Heisenberg picture)."""
    n = state.n_sites
    w.check_sites(n)
    evolved = {f.evolved for f in w.factors}
    if len(evolved) > 1:
        raise ValueError("ED moments need all operators static or all evolved")
    psi = state
    if evolved == {True} and t != 0.0:
        psi = ed_evolve(state, h, t, profile)
    vec = psi.amplitudes
    if w.global_string:
        vec = parity_string(n) @ vec
    for f in reversed(w.factors):
        vec = fermion_operator(f.site, f.dagger, n) @ vec
    return complex(np.vdot(psi.amplitudes, vec))
