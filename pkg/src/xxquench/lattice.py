"""Chain geometry, coupling profiles and initial-state descriptions.

Sites are numbered 1..N in every public interface. A site spin is
``cos(theta/2)|up> + sin(theta/2)|down>`` with zero azimuthal phase, so all
product states handled here are real in the sigma^z basis.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class ChainSpec:
    """Open chain of ``n_sites`` spins with uniform coupling ``j_scale``."""

    n_sites: int
    j_scale: float = 1.0

    def __post_init__(self):
        if int(self.n_sites) != self.n_sites or self.n_sites < 2:
            raise ValueError(f"n_sites must be an integer >= 2, got {self.n_sites!r}")
        if not self.j_scale > 0:
            raise ValueError(f"j_scale must be > 0, got {self.j_scale!r}")
        object.__setattr__(self, "n_sites", int(self.n_sites))
        object.__setattr__(self, "j_scale", float(self.j_scale))

    def uniform(self) -> "CouplingProfile":
        return CouplingProfile((self.j_scale,) * (self.n_sites - 1), self.j_scale)


@dataclass(frozen=True)
class CouplingProfile:
    """Per-bond couplings ``J_k`` for bonds (k, k+1), k = 1..N-1."""

    bonds: tuple[float, ...]
    j_scale: float = 1.0

    def __post_init__(self):
        bonds = tuple(float(b) for b in self.bonds)
        if len(bonds) < 1:
            raise ValueError("a chain needs at least one bond")
        if not all(math.isfinite(b) for b in bonds):
            raise ValueError("bond couplings must be finite")
        object.__setattr__(self, "bonds", bonds)
        object.__setattr__(self, "j_scale", float(self.j_scale))

    @property
    def n_sites(self) -> int:
        return len(self.bonds) + 1

    @property
    def deltas(self) -> np.ndarray:
        """Relative offsets ``J_k / J - 1``."""
        return np.asarray(self.bonds) / self.j_scale - 1.0

    @property
    def is_uniform(self) -> bool:
        return all(b == self.j_scale for b in self.bonds)

    def hopping_matrix(self) -> np.ndarray:
        """Real symmetric tridiagonal single-particle matrix, zero diagonal."""
        n = self.n_sites
        a = np.zeros((n, n))
        idx = np.arange(n - 1)
        a[idx, idx + 1] = self.bonds
        a[idx + 1, idx] = self.bonds
        return a


@dataclass(frozen=True)
class ProductStateSpec:
    """Product state given by one canting angle per site (radians)."""

    angles: tuple[float, ...]

    def __post_init__(self):
        angles = tuple(float(a) for a in self.angles)
        if len(angles) < 2:
            raise ValueError("a product state needs at least 2 sites")
        if not all(math.isfinite(a) for a in angles):
            raise ValueError("angles must be finite")
        object.__setattr__(self, "angles", angles)

    @property
    def n_sites(self) -> int:
        return len(self.angles)

    def amplitudes(self) -> np.ndarray:
        """(N, 2) array of (up, down) amplitudes per site."""
        th = np.asarray(self.angles)
        return np.stack([np.cos(th / 2), np.sin(th / 2)], axis=1)

    def sz(self) -> np.ndarray:
        """Single-site <sigma^z> values."""
        return np.cos(np.asarray(self.angles))

    def sx(self) -> np.ndarray:
        """Single-site <sigma^x> values."""
        return np.sin(np.asarray(self.angles))

    def is_sz_eigenstate(self, atol: float = 1e-14) -> bool:
        return bool(np.all(np.abs(self.sx()) <= atol))


@dataclass(frozen=True)
class BellPairStateSpec:
    """Product of normalized singlets on the disjoint pairs (2k-1, 2k)."""

    n_pairs: int

    def __post_init__(self):
        if int(self.n_pairs) != self.n_pairs or self.n_pairs < 1:
            raise ValueError(f"n_pairs must be a positive integer, got {self.n_pairs!r}")
        object.__setattr__(self, "n_pairs", int(self.n_pairs))

    @property
    def n_sites(self) -> int:
        return 2 * self.n_pairs

    @classmethod
    def for_sites(cls, n: int) -> "BellPairStateSpec":
        if n < 2 or n % 2:
            raise ValueError(f"Bell-pair states need an even number of sites >= 2, got N={n}")
        return cls(n // 2)


@dataclass(frozen=True)
class MixtureSpec:
    """Convex mixture of product states; weights are renormalized on construction."""

    components: tuple[tuple[float, ProductStateSpec], ...] = field(default=())

    def __post_init__(self):
        comps = tuple((float(w), s) for w, s in self.components)
        if not comps:
            raise ValueError("a mixture needs at least one component")
        weights = [w for w, _ in comps]
        if any(w < 0 or not math.isfinite(w) for w in weights):
            raise ValueError("mixture weights must be finite and nonnegative")
        total = math.fsum(weights)
        if abs(total - 1.0) > 1e-12:
            raise ValueError(f"mixture weights must sum to 1 (got {total!r})")
        n = {s.n_sites for _, s in comps}
        if len(n) != 1:
            raise ValueError("all mixture components must have the same length")
        comps = tuple((w / total, s) for w, s in comps)
        object.__setattr__(self, "components", comps)

    @property
    def n_sites(self) -> int:
        return self.components[0][1].n_sites

    @property
    def weights(self) -> tuple[float, ...]:
        return tuple(w for w, _ in self.components)


def canted_state(n: int, alpha: float) -> ProductStateSpec:
    """Spiral product state with ``theta_k = (k - 1) * alpha``."""
    if int(n) != n or n < 2:
        raise ValueError(f"n must be an integer >= 2, got {n!r}")
    if not 0.0 <= alpha <= TWO_PI:
        raise ValueError(f"alpha must lie in [0, 2*pi], got {alpha!r}")
    return ProductStateSpec(tuple(k * float(alpha) for k in range(int(n))))


def neel_state(n: int) -> ProductStateSpec:
    return canted_state(n, math.pi)


def all_up_state(n: int) -> ProductStateSpec:
    return canted_state(n, 0.0)


def flipped_state(base: ProductStateSpec, site: int) -> ProductStateSpec:
    """Apply sigma^x to ``site`` (1-based); exact up to a per-site sign."""
    n = base.n_sites
    if int(site) != site or not 1 <= site <= n:
        raise ValueError(f"site must lie in 1..{n}, got {site!r}")
    angles = list(base.angles)
    angles[site - 1] = math.fmod(math.pi - angles[site - 1], TWO_PI)
    return ProductStateSpec(tuple(angles))


def realization_rng(seed: int, realization: int = 0) -> np.random.Generator:
    """PCG64 stream for one disorder realization, seeded by ``seed + realization``."""
    return np.random.Generator(np.random.PCG64(int(seed) + int(realization)))


def gaussian_couplings(spec: ChainSpec, delta: float, seed: int) -> CouplingProfile:
    """Bonds ``J * (1 + d_k)`` with ``d_k ~ Normal(0, delta**2)`` i.i.d."""
    if not delta >= 0:
        raise ValueError(f"delta must be >= 0, got {delta!r}")
    if delta == 0:
        return spec.uniform()
    offsets = realization_rng(seed).normal(0.0, delta, size=spec.n_sites - 1)
    return CouplingProfile(tuple(spec.j_scale * (1.0 + offsets)), spec.j_scale)
