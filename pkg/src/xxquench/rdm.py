"""Reduced density matrix of the two end spins (1, N).

Basis order is ``|up up>, |up down>, |down up>, |down down>`` for
(spin 1, spin N). Entry ``rho[i, j] = <i|rho|j>`` is the expectation of
``|j><i|``, i.e. of ``|b_1><a_1| (x) |b_N><a_N|`` for ``i = (a_1, a_N)`` and
``j = (b_1, b_N)``. Each single-site outer product is rewritten in fermions:

===============  ==========================  ==============================
site operator    spin 1                      spin N
===============  ==========================  ==============================
P^up             c+_1 c_1                    c+_N c_N
P^down           1 - c+_1 c_1                1 - c+_N c_N
sigma^-          c_1                         -c_N S_{1,N}
sigma^+          c+_1                        c+_N S_{1,N}
===============  ==========================  ==============================

The spin-N rows use ``c_N = S_{1,N-1} sigma^-_N`` together with
``sigma^-_N (-sigma^z_N) = -sigma^-_N`` and ``sigma^+_N (-sigma^z_N) = sigma^+_N``.
The parity string ``S_{1,N}`` commutes with the XX Hamiltonian, so every
entry is a combination of fully evolved words with a static string.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

from .correlator import FermionWord, bell_correlation_matrices, c, cdag, dynamic_moment_series
from .lattice import BellPairStateSpec, MixtureSpec, ProductStateSpec
from .propagator import Propagator, PropagatorSeries

HERMITIAN_TOL = 1e-10
TRACE_TOL = 1e-10
PSD_TOL = 1e-8

UP, DOWN = 0, 1
BASIS_LABELS = ("up,up", "up,down", "down,up", "down,down")


@dataclass(frozen=True, eq=False)
class TwoSpinDensityMatrix:
    entries: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        rho = np.asarray(self.entries, dtype=complex)
        if rho.shape != (4, 4):
            raise ValueError(f"expected a 4x4 matrix, got shape {rho.shape}")
        check_density_matrix(rho)
        object.__setattr__(self, "entries", rho)

    def __array__(self, dtype=None, copy=None):
        return self.entries if dtype is None else self.entries.astype(dtype)


def check_density_matrix(rho: np.ndarray) -> None:
    """Raise ``ValueError`` unless ``rho`` is Hermitian, unit-trace and PSD within tolerance."""
    herm = np.abs(rho - rho.conj().T).max()
    if herm > HERMITIAN_TOL:
        raise ValueError(f"density matrix is not Hermitian (deviation {herm:.2e})")
    tr = np.trace(rho)
    if abs(tr - 1.0) > TRACE_TOL:
        raise ValueError(f"density matrix trace is {tr:.12g}, expected 1")
    lowest = np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))[0]
    if lowest < -PSD_TOL:
        raise ValueError(f"density matrix is not positive semidefinite (eigenvalue {lowest:.2e})")


# (coefficient, factors, has_string) per single-site outer product |b><a|
def _site_one_terms():
    return {
        (UP, UP): [(1.0, (cdag(1), c(1)), False)],
        (DOWN, DOWN): [(1.0, (), False), (-1.0, (cdag(1), c(1)), False)],
        (UP, DOWN): [(1.0, (c(1),), False)],
        (DOWN, UP): [(1.0, (cdag(1),), False)],
    }


def _site_n_terms(n):
    return {
        (UP, UP): [(1.0, (cdag(n), c(n)), False)],
        (DOWN, DOWN): [(1.0, (), False), (-1.0, (cdag(n), c(n)), False)],
        (UP, DOWN): [(-1.0, (c(n),), True)],
        (DOWN, UP): [(1.0, (cdag(n),), True)],
    }


def element_table(n: int) -> dict[tuple[int, int], list[tuple[float, FermionWord]]]:
    """Linear combination of fermion words giving each entry of ``rho_{1,N}``."""
    if n < 2:
        raise ValueError("need at least two sites")
    one, last = _site_one_terms(), _site_n_terms(n)
    table = {}
    for i in range(4):
        a1, an = divmod(i, 2)
        for j in range(4):
            b1, bn = divmod(j, 2)
            terms = []
            for c1, f1, _ in one[(a1, b1)]:
                for cn, fn, string in last[(an, bn)]:
                    terms.append((c1 * cn, FermionWord(f1 + fn, string)))
            table[(i, j)] = terms
    return table


def _series(prop: Union[Propagator, PropagatorSeries]) -> PropagatorSeries:
    if isinstance(prop, PropagatorSeries):
        return prop
    return PropagatorSeries(prop.amplitudes[np.newaxis], np.array([prop.time]))


def _check_dims(n_state: int, series: PropagatorSeries) -> None:
    if n_state != series.n_sites:
        raise ValueError(f"state has {n_state} sites but propagator has {series.n_sites}")


def rdm_product_series(state: ProductStateSpec, prop: Union[Propagator, PropagatorSeries]) -> np.ndarray:
    """``rho_{1,N}(t)`` for every time of ``prop``, shape ``(T, 4, 4)``."""
    series = _series(prop)
    _check_dims(state.n_sites, series)
    cache: dict[FermionWord, np.ndarray] = {}
    out = np.zeros((len(series), 4, 4), dtype=complex)
    for (i, j), terms in element_table(state.n_sites).items():
        for coef, w in terms:
            if len(w) == 0 and not w.global_string:
                out[:, i, j] += coef
                continue
            if w not in cache:
                cache[w] = dynamic_moment_series(w, state, series)
            out[:, i, j] += coef * cache[w]
    return out


def rdm_product(state: ProductStateSpec, prop: Propagator) -> TwoSpinDensityMatrix:
    return TwoSpinDensityMatrix(rdm_product_series(state, prop)[0], prop.time)


def bell_x_elements(pairs: BellPairStateSpec, prop: Union[Propagator, PropagatorSeries]) -> dict[str, np.ndarray]:
    """The six nonzero entries ``a, a', b, b', c, c'`` as arrays over time."""
    series = _series(prop)
    _check_dims(pairs.n_sites, series)
    cmat, gmat = bell_correlation_matrices(pairs)
    f1 = series.amplitudes[:, 0, :]
    fn = series.amplitudes[:, -1, :]
    # <c+_i(t) c_j(t)> = sum_lm f*_il f_jm <c+_l c_m>
    n1 = np.einsum("tl,lm,tm->t", f1.conj(), cmat, f1).real
    nn = np.einsum("tl,lm,tm->t", fn.conj(), cmat, fn).real
    hop_n1 = np.einsum("tl,lm,tm->t", fn.conj(), cmat, f1)
    hop_1n = np.einsum("tl,lm,tm->t", f1.conj(), cmat, fn)
    a = nn * n1 - (hop_n1 * hop_1n).real
    return {
        "a": a,
        "a_prime": 1.0 - n1 - nn + a,
        "b": n1 - a,
        "b_prime": nn - a,
        "c": np.einsum("tl,lm,tm->t", f1, gmat, fn.conj()),
        "c_prime": np.einsum("tl,lm,tm->t", fn, gmat, f1.conj()),
    }


def rdm_bell_series(pairs: BellPairStateSpec, prop: Union[Propagator, PropagatorSeries]) -> np.ndarray:
    x = bell_x_elements(pairs, prop)
    out = np.zeros((len(x["a"]), 4, 4), dtype=complex)
    out[:, 0, 0] = x["a"]
    out[:, 1, 1] = x["b"]
    out[:, 1, 2] = x["c"]
    out[:, 2, 1] = x["c_prime"]
    out[:, 2, 2] = x["b_prime"]
    out[:, 3, 3] = x["a_prime"]
    return out


def rdm_bell(pairs: BellPairStateSpec, prop: Propagator) -> TwoSpinDensityMatrix:
    return TwoSpinDensityMatrix(rdm_bell_series(pairs, prop)[0], prop.time)


def rdm_mixture_series(mix: MixtureSpec, prop: Union[Propagator, PropagatorSeries]) -> np.ndarray:
    """Weighted sum of component RDMs; evolution is linear in the initial state."""
    series = _series(prop)
    _check_dims(mix.n_sites, series)
    out = np.zeros((len(series), 4, 4), dtype=complex)
    for weight, state in mix.components:
        if weight:
            out += weight * rdm_product_series(state, series)
    return out


def rdm_mixture(mix: MixtureSpec, prop: Propagator) -> TwoSpinDensityMatrix:
    return TwoSpinDensityMatrix(rdm_mixture_series(mix, prop)[0], prop.time)


InitialState = Union[ProductStateSpec, BellPairStateSpec, MixtureSpec]


def rdm_series(init: InitialState, prop: Union[Propagator, PropagatorSeries]) -> np.ndarray:
    """Dispatch on the initial-state type."""
    if isinstance(init, ProductStateSpec):
        return rdm_product_series(init, prop)
    if isinstance(init, BellPairStateSpec):
        return rdm_bell_series(init, prop)
    if isinstance(init, MixtureSpec):
        return rdm_mixture_series(init, prop)
    raise TypeError(f"unsupported initial state {type(init).__name__}")
