"""Expectation values of short Jordan-Wigner fermion words on product states.

A word is an ordered product of at most four fermion operators, each either
static (``c_l``, ``c_l^dagger``) or evolved (``c_l(t)``, ``c_l^dagger(t)``),
optionally followed on the right by the parity string
``S_{1,N} = prod_k (-sigma^z_k)``.

With ``c_l = S_{1,l-1} sigma^-_l`` every static operator acts as ``-sigma^z``
on sites left of ``l``, as ``sigma^-`` (``sigma^+`` for the creator) on ``l``
and trivially on the right. On a product state the expectation of a word is
therefore the product over sites of single-site expectations of the ordered
2x2 product of these local factors. Signs come only from these matrix
products, never from symbolic anticommutation rules.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Union

import numpy as np

from .lattice import BellPairStateSpec, ProductStateSpec
from .propagator import Propagator, PropagatorSeries

MAX_WORD_LENGTH = 4

IDENTITY = np.eye(2)
SIGMA_PLUS = np.array([[0.0, 1.0], [0.0, 0.0]])  # |up><down|
SIGMA_MINUS = np.array([[0.0, 0.0], [1.0, 0.0]])  # |down><up|
MINUS_SZ = np.diag([-1.0, 1.0])

# local role of one operator relative to the site being visited
PENDING, HERE, PASSED = 0, 1, 2


@dataclass(frozen=True)
class Factor:
    site: int
    dagger: bool = False
    evolved: bool = True

    def __str__(self):
        s = f"c{'+' if self.dagger else ''}_{self.site}"
        return s + ("(t)" if self.evolved else "")


def c(site: int, evolved: bool = True) -> Factor:
    return Factor(site, False, evolved)


def cdag(site: int, evolved: bool = True) -> Factor:
    return Factor(site, True, evolved)


@dataclass(frozen=True)
class FermionWord:
    """Ordered operator product, optionally times ``S_{1,N}`` on the right."""

    factors: tuple[Factor, ...]
    global_string: bool = False

    def __post_init__(self):
        factors = tuple(self.factors)
        if len(factors) > MAX_WORD_LENGTH:
            raise ValueError(f"words are limited to {MAX_WORD_LENGTH} operators, got {len(factors)}")
        object.__setattr__(self, "factors", factors)

    def __len__(self) -> int:
        return len(self.factors)

    def __str__(self):
        body = " ".join(str(f) for f in self.factors) or "1"
        return body + (" S_1N" if self.global_string else "")

    @property
    def is_static(self) -> bool:
        return not any(f.evolved for f in self.factors)

    def static(self) -> "FermionWord":
        return FermionWord(tuple(Factor(f.site, f.dagger, False) for f in self.factors), self.global_string)

    def adjoint_reversed(self) -> "FermionWord":
        """Reverse the order and flip every dagger, keeping the string on the right."""
        return FermionWord(
            tuple(Factor(f.site, not f.dagger, f.evolved) for f in reversed(self.factors)),
            self.global_string,
        )

    def check_sites(self, n: int) -> None:
        for f in self.factors:
            if not 1 <= f.site <= n:
                raise ValueError(f"operator {f} addresses a site outside 1..{n}")


def word(*factors: Factor, string: bool = False) -> FermionWord:
    return FermionWord(tuple(factors), string)


def _local(role: int, dagger: bool) -> np.ndarray:
    if role == PENDING:
        return MINUS_SZ
    if role == HERE:
        return SIGMA_PLUS if dagger else SIGMA_MINUS
    return IDENTITY


def _site_operator(roles: Iterable[int], daggers: Iterable[bool], string: bool) -> np.ndarray:
    op = IDENTITY
    for role, dagger in zip(roles, daggers):
        op = op @ _local(role, dagger)
    if string:
        op = op @ MINUS_SZ
    return op


def _pattern_table(w: FermionWord, state: ProductStateSpec) -> np.ndarray:
    """Single-site expectations for every role pattern.

    Returns an array ``E[p, k]`` where pattern ``p = sum_i role_i * 3**i``
    fixes the role of each operator of ``w`` at site ``k + 1``.
    """
    n_ops = len(w)
    daggers = [f.dagger for f in w.factors]
    amps = state.amplitudes()
    table = np.empty((3**n_ops, state.n_sites))
    for p, roles in enumerate(_patterns(n_ops)):
        op = _site_operator(roles, daggers, w.global_string)
        table[p] = np.einsum("ki,ij,kj->k", amps, op, amps)
    return table


def _patterns(n_ops: int):
    # pattern index p = sum_i roles[i] * 3**i
    for p in range(3**n_ops):
        yield [(p // 3**i) % 3 for i in range(n_ops)]


def static_moment(w: FermionWord, state: ProductStateSpec) -> complex:
    """Exact ``<psi| w |psi>`` for a word of static operators on a product state."""
    if not w.is_static:
        raise ValueError("static_moment needs a word without evolved operators")
    w.check_sites(state.n_sites)
    amps = state.amplitudes()
    daggers = [f.dagger for f in w.factors]
    value = 1.0
    for k in range(1, state.n_sites + 1):
        roles = [PENDING if k < f.site else HERE if k == f.site else PASSED for f in w.factors]
        op = _site_operator(roles, daggers, w.global_string)
        value *= amps[k - 1] @ op @ amps[k - 1]
        if value == 0.0:
            break
    return complex(value)


def _bell_quadratic_hop(l: int, m: int) -> bool:
    """True when (l, m) are the two members of one singlet pair, l != m."""
    return (l % 2 == 1 and m == l + 1) or (l % 2 == 0 and m == l - 1)


def static_moment_bell(w: FermionWord, pairs: BellPairStateSpec) -> complex:
    """Static quadratic moments on the product of singlets (2k-1, 2k).

    Supported shapes are ``c^dagger_l c_m`` without string and
    ``c_l c^dagger_m S_{1,N}``; anything else raises ``ValueError``.
    """
    n = pairs.n_sites
    if not w.is_static or len(w) != 2:
        raise ValueError(f"unsupported Bell-pair word shape: {w}")
    w.check_sites(n)
    a, b = w.factors
    l, m = a.site, b.site
    if a.dagger and not b.dagger and not w.global_string:
        if l == m:
            return 0.5 + 0j
        return -0.5 + 0j if _bell_quadratic_hop(l, m) else 0j
    if not a.dagger and b.dagger and w.global_string:
        if l == m or _bell_quadratic_hop(l, m):
            return 0.5 * (-1) ** (n // 2) + 0j
        return 0j
    raise ValueError(f"unsupported Bell-pair word shape: {w}")


def bell_correlation_matrices(pairs: BellPairStateSpec) -> tuple[np.ndarray, np.ndarray]:
    """Matrices ``C[l, m] = <c^dagger_l c_m>`` and ``G[l, m] = <c_l c^dagger_m S_{1,N}>``."""
    n = pairs.n_sites
    cmat = np.zeros((n, n), dtype=complex)
    gmat = np.zeros((n, n), dtype=complex)
    for l in range(1, n + 1):
        for m in range(1, n + 1):
            if l == m or abs(l - m) == 1:
                cmat[l - 1, m - 1] = static_moment_bell(word(cdag(l, False), c(m, False)), pairs)
                gmat[l - 1, m - 1] = static_moment_bell(word(c(l, False), cdag(m, False), string=True), pairs)
    return cmat, gmat


def _coefficients(w: FermionWord, amps: np.ndarray) -> list[np.ndarray]:
    """Per-operator expansion coefficients over sites, each of shape (T, N)."""
    n_t, n = amps.shape[0], amps.shape[1]
    coefs = []
    for f in w.factors:
        if f.evolved:
            row = amps[:, f.site - 1, :]
            coefs.append(np.conj(row) if f.dagger else row)
        else:
            onehot = np.zeros((n_t, n), dtype=complex)
            onehot[:, f.site - 1] = 1.0
            coefs.append(onehot)
    return coefs


def _as_amplitudes(prop: Union[Propagator, PropagatorSeries]) -> np.ndarray:
    if isinstance(prop, PropagatorSeries):
        return prop.amplitudes
    return prop.amplitudes[np.newaxis]


def _check(w: FermionWord, state: ProductStateSpec, amps: np.ndarray) -> None:
    if amps.shape[1] != state.n_sites:
        raise ValueError(f"state has {state.n_sites} sites but propagator has {amps.shape[1]}")
    w.check_sites(state.n_sites)


def dynamic_moment_naive(w: FermionWord, state: ProductStateSpec, prop: Propagator) -> complex:
    """Reference evaluator summing the static moment of every index tuple.

    Each evolved operator is expanded over its N sites, so a word of length
    L costs ``O(N**L * N)``. Only meant as an oracle for small chains.
    """
    amps = _as_amplitudes(prop)
    if amps.shape[0] != 1:
        raise ValueError("dynamic_moment_naive takes a single-time propagator")
    _check(w, state, amps)
    n = state.n_sites
    n_ops = len(w)
    if n_ops == 0:
        return static_moment(w, state)
    table = _pattern_table(w, state)
    coefs = [cf[0] for cf in _coefficients(w, amps)]
    candidates = [np.nonzero(cf)[0] for cf in coefs]  # 0-based sites with nonzero weight
    tuples = np.array(list(itertools.product(*candidates)), dtype=int).reshape(-1, n_ops)
    if tuples.size == 0:
        return 0j
    weights = np.ones(len(tuples), dtype=complex)
    for i in range(n_ops):
        weights *= coefs[i][tuples[:, i]]
    moments = np.ones(len(tuples))
    powers = 3 ** np.arange(n_ops)
    for k in range(n):
        roles = np.where(k < tuples, PENDING, np.where(k == tuples, HERE, PASSED))
        moments *= table[roles @ powers, k]
    return complex(np.sum(weights * moments))


def _transfer_plan(n_ops: int):
    """All (placed-before, placed-here) operator subsets with the pattern they induce."""
    plan = []
    full = (1 << n_ops) - 1
    for before in range(1 << n_ops):
        rest = full & ~before
        here = rest
        while True:
            pattern = 0
            for i in range(n_ops):
                bit = 1 << i
                role = PASSED if before & bit else HERE if here & bit else PENDING
                pattern += role * 3**i
            plan.append((before, before | here, here, pattern))
            if here == 0:
                break
            here = (here - 1) & rest
    return plan


def dynamic_moment_series(
    w: FermionWord,
    state: ProductStateSpec,
    prop: Union[Propagator, PropagatorSeries],
    chunk: int = 256,
) -> np.ndarray:
    """Transfer-contraction evaluation of ``<w>`` for every time of ``prop``.

    Sweeping sites left to right, each operator is either still pending
    (its string covers the site), placed at the current site (weighted by its
    expansion coefficient), or already placed. The 2**L placement subsets
    form the transfer state, so the cost is ``O(N * 3**L)`` per time.
    """
    amps = _as_amplitudes(prop)
    _check(w, state, amps)
    n_ops = len(w)
    n_t, n = amps.shape[0], state.n_sites
    table = _pattern_table(w, state)
    if n_ops == 0:
        return np.full(n_t, np.prod(table[0]), dtype=complex)

    plan = [p for p in _transfer_plan(n_ops) if np.any(table[p[3]] != 0.0)]
    dim = 1 << n_ops
    full = dim - 1
    src = np.array([p[0] for p in plan])
    dst = np.array([p[1] for p in plan])
    out = np.empty(n_t, dtype=complex)
    all_coefs = _coefficients(w, amps)
    for start in range(0, n_t, chunk):
        sl = slice(start, min(start + chunk, n_t))
        coefs = [cf[sl] for cf in all_coefs]
        # factor[j, t, k]: weight of transition j at site k
        factor = np.empty((len(plan), sl.stop - sl.start, n), dtype=complex)
        for j, (_, _, here, pattern) in enumerate(plan):
            f = np.broadcast_to(table[pattern], factor.shape[1:]).astype(complex)
            for i in range(n_ops):
                if here >> i & 1:
                    f = f * coefs[i]
            factor[j] = f
        weights = np.zeros((sl.stop - sl.start, dim), dtype=complex)
        weights[:, 0] = 1.0
        transfer = np.zeros((sl.stop - sl.start, dim, dim), dtype=complex)
        for k in range(n):
            transfer[:, src, dst] = factor[:, :, k].T
            weights = np.einsum("ts,tsu->tu", weights, transfer)
        out[sl] = weights[:, full]
    return out


def dynamic_moment_transfer(w: FermionWord, state: ProductStateSpec, prop: Propagator) -> complex:
    """Single-time value of :func:`dynamic_moment_series`."""
    if isinstance(prop, PropagatorSeries):
        raise TypeError("use dynamic_moment_series for a time series")
    return complex(dynamic_moment_series(w, state, prop)[0])
