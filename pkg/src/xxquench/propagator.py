"""Single-particle transition amplitudes of the Jordan-Wigner fermions.

Under the XX Hamiltonian the fermions hop with the real symmetric
tridiagonal matrix ``A`` (``A[k, k+1] = J_k``), so the Heisenberg-picture
annihilators evolve as ``c_k(t) = sum_l f[k, l](t) c_l`` with
``f(t) = exp(-i A t)``. Time is measured in units of ``1/J``.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence, Union

import numpy as np

from .jacobi import jacobi_eigh
from .lattice import ChainSpec, CouplingProfile


@dataclass(frozen=True, eq=False)
class Propagator:
    """Amplitude matrix ``f[k-1, l-1] = f_{k,l}(t)`` at a single time."""

    amplitudes: np.ndarray
    time: float

    @property
    def n_sites(self) -> int:
        return self.amplitudes.shape[0]


@dataclass(frozen=True, eq=False)
class PropagatorSeries:
    """Amplitude matrices for a grid of times, shape ``(T, N, N)``."""

    amplitudes: np.ndarray
    times: np.ndarray

    @property
    def n_sites(self) -> int:
        return self.amplitudes.shape[1]

    def __len__(self) -> int:
        return len(self.times)

    def __getitem__(self, i: int) -> Propagator:
        return Propagator(self.amplitudes[i], float(self.times[i]))


Source = Union[ChainSpec, CouplingProfile]


def uniform_spectrum(spec: ChainSpec) -> tuple[np.ndarray, np.ndarray]:
    """Standing-wave modes of the open uniform chain.

    Returns energies ``2 J cos(q_m)`` and the orthonormal mode matrix
    ``phi[k-1, m-1] = sqrt(2/(N+1)) sin(q_m k)`` with ``q_m = pi m/(N+1)``.
    """
    n = spec.n_sites
    m = np.arange(1, n + 1)
    q = np.pi * m / (n + 1)
    energies = 2.0 * spec.j_scale * np.cos(q)
    phi = np.sqrt(2.0 / (n + 1)) * np.sin(np.outer(m, q))
    return energies, phi


_eig_lock = threading.Lock()


@lru_cache(maxsize=64)
def _profile_eigenbasis(profile: CouplingProfile) -> tuple[np.ndarray, np.ndarray]:
    w, v = jacobi_eigh(profile.hopping_matrix())
    w.setflags(write=False)
    v.setflags(write=False)
    return w, v


def profile_eigenbasis(profile: CouplingProfile) -> tuple[np.ndarray, np.ndarray]:
    """Cached Jacobi eigendecomposition of the hopping matrix of ``profile``."""
    with _eig_lock:
        return _profile_eigenbasis(profile)


def _exponentiate(energies: np.ndarray, modes: np.ndarray, times: np.ndarray) -> np.ndarray:
    phases = np.exp(-1j * np.multiply.outer(times, energies))
    return np.einsum("km,tm,lm->tkl", modes, phases, modes, optimize=True)


def analytic_propagator(spec: ChainSpec, t: float) -> Propagator:
    return analytic_series(spec, [t])[0]


def analytic_series(spec: ChainSpec, times: Sequence[float]) -> PropagatorSeries:
    times = np.atleast_1d(np.asarray(times, dtype=float))
    energies, phi = uniform_spectrum(spec)
    return PropagatorSeries(_exponentiate(energies, phi, times), times)


def numeric_propagator(profile: CouplingProfile, t: float) -> Propagator:
    return numeric_series(profile, [t])[0]


def numeric_series(profile: CouplingProfile, times: Sequence[float]) -> PropagatorSeries:
    """``exp(-i A t)`` from one eigendecomposition reused for every time."""
    times = np.atleast_1d(np.asarray(times, dtype=float))
    energies, modes = profile_eigenbasis(profile)
    return PropagatorSeries(_exponentiate(energies, modes, times), times)


def propagator_series(source: Source, times: Sequence[float]) -> PropagatorSeries:
    """Analytic amplitudes for a ``ChainSpec``, numeric ones for a ``CouplingProfile``."""
    if isinstance(source, ChainSpec):
        return analytic_series(source, times)
    if isinstance(source, CouplingProfile):
        return numeric_series(source, times)
    raise TypeError(f"unsupported propagator source {type(source).__name__}")


def walk_distribution(prop: Propagator, k: int) -> np.ndarray:
    """Occupation probabilities ``|f_{k,l}(t)|^2`` for l = 1..N of a fermion started at k."""
    n = prop.n_sites
    if int(k) != k or not 1 <= k <= n:
        raise ValueError(f"k must lie in 1..{n}, got {k!r}")
    return np.abs(prop.amplitudes[k - 1]) ** 2
