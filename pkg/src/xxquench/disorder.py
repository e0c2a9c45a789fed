"""Disorder ensembles: random single spin flips and Gaussian bond disorder."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import partial
from typing import Sequence, Union

import numpy as np

from ._parallel import parallel_map
from .entanglement import measure_series, teleportation_fidelity
from .jacobi import EigensolverError
from .lattice import (
    BellPairStateSpec,
    ChainSpec,
    MixtureSpec,
    ProductStateSpec,
    flipped_state,
    gaussian_couplings,
)
from .propagator import PropagatorSeries, numeric_series
from .rdm import rdm_series


@dataclass(frozen=True)
class FlipEnsemble:
    """Base state flipped at one site with probability ``epsilon`` per site."""

    epsilon: float
    base: ProductStateSpec

    def __post_init__(self):
        if not self.epsilon >= 0:
            raise ValueError(f"epsilon must be >= 0, got {self.epsilon!r}")
        if self.base.n_sites * self.epsilon > 1 + 1e-15:
            raise ValueError(f"N * epsilon must not exceed 1 (N={self.base.n_sites}, epsilon={self.epsilon})")


@dataclass(frozen=True)
class CouplingEnsemble:
    delta: float
    realizations: int
    seed: int = 0

    def __post_init__(self):
        if not self.delta >= 0:
            raise ValueError(f"delta must be >= 0, got {self.delta!r}")
        if int(self.realizations) != self.realizations or self.realizations < 1:
            raise ValueError(f"realizations must be a positive integer, got {self.realizations!r}")


def flip_mixture(ens: FlipEnsemble) -> MixtureSpec:
    """``(1 - N eps) |base><base| + eps * sum_k X_k |base><base| X_k``."""
    n = ens.base.n_sites
    if ens.epsilon == 0:
        return MixtureSpec(((1.0, ens.base),))
    flip_total = math.fsum([ens.epsilon] * n)
    components = [(max(0.0, 1.0 - flip_total), ens.base)]
    components += [(ens.epsilon, flipped_state(ens.base, k)) for k in range(1, n + 1)]
    return MixtureSpec(tuple((w, s) for w, s in components if w > 0))


def flip_disorder_curves(
    base: ProductStateSpec, flip_probabilities: Sequence[float], series: PropagatorSeries
) -> dict[float, np.ndarray]:
    """RDM series for several total flip probabilities ``N eps``.

    The base and single-flip RDMs are computed once and re-weighted for
    each probability, which is equivalent to building every mixture.
    """
    n = base.n_sites
    base_rho = rdm_series(base, series)
    need_flips = any(p > 0 for p in flip_probabilities)
    flip_sum = None
    if need_flips:
        flip_sum = sum(rdm_series(flipped_state(base, k), series) for k in range(1, n + 1))
    out = {}
    for p in flip_probabilities:
        FlipEnsemble(p / n, base)  # validates N * eps <= 1
        out[p] = base_rho if p == 0 else (1.0 - p) * base_rho + (p / n) * flip_sum
    return out


@dataclass
class EnsembleResult:
    times: np.ndarray
    concurrence: np.ndarray
    fef: np.ndarray
    fidelity: np.ndarray
    per_realization: dict[int, dict[str, np.ndarray]] = field(default_factory=dict)
    failures: dict[int, str] = field(default_factory=dict)
    seeds: dict[int, int] = field(default_factory=dict)
    average: str = "measures"


InitialState = Union[ProductStateSpec, BellPairStateSpec]


def _one_realization(r: int, ens: CouplingEnsemble, spec: ChainSpec, init: InitialState, times: np.ndarray):
    seed = int(ens.seed) + r
    try:
        profile = gaussian_couplings(spec, ens.delta, seed)
        rho = rdm_series(init, numeric_series(profile, times))
    except EigensolverError as exc:
        return r, seed, None, str(exc)
    return r, seed, rho, None


def _fsum_axis0(stack: np.ndarray) -> np.ndarray:
    flat = stack.reshape(stack.shape[0], -1)
    if np.iscomplexobj(flat):
        re = [math.fsum(col) for col in flat.real.T]
        im = [math.fsum(col) for col in flat.imag.T]
        return (np.array(re) + 1j * np.array(im)).reshape(stack.shape[1:])
    return np.array([math.fsum(col) for col in flat.T]).reshape(stack.shape[1:])


def ensemble_average(
    ens: CouplingEnsemble,
    spec: ChainSpec,
    init: InitialState,
    t_grid: Sequence[float],
    average: str = "measures",
    workers: int | None = 1,
) -> EnsembleResult:
    """Average entanglement over Gaussian bond-disorder realizations.

    Realization ``r`` uses seed ``ens.seed + r``. With ``average="measures"``
    concurrence and FEF are averaged across realizations; ``"rho"`` averages
    the density matrices first and measures the mean state. Sums are
    compensated so the result does not depend on realization order.
    Realizations whose eigensolver fails are listed in ``failures`` and left
    out of the mean.
    """
    if average not in ("measures", "rho"):
        raise ValueError(f"average must be 'measures' or 'rho', got {average!r}")
    if init.n_sites != spec.n_sites:
        raise ValueError(f"initial state has {init.n_sites} sites, chain has {spec.n_sites}")
    times = np.atleast_1d(np.asarray(t_grid, dtype=float))
    job = partial(_one_realization, ens=ens, spec=spec, init=init, times=times)
    results = parallel_map(job, range(ens.realizations), workers)

    per, failures, seeds, rhos = {}, {}, {}, {}
    for r, seed, rho, err in results:
        seeds[r] = seed
        if err is not None:
            failures[r] = err
            continue
        rhos[r] = rho
        per[r] = measure_series(rho)
    if not rhos:
        raise RuntimeError(f"all {ens.realizations} disorder realizations failed: {failures}")

    ok = sorted(rhos)
    count = len(ok)
    if average == "measures":
        conc = _fsum_axis0(np.stack([per[r]["concurrence"] for r in ok])) / count
        fef = _fsum_axis0(np.stack([per[r]["fef"] for r in ok])) / count
    else:
        mean_rho = _fsum_axis0(np.stack([rhos[r] for r in ok])) / count
        m = measure_series(mean_rho)
        conc, fef = m["concurrence"], m["fef"]
    fid = np.atleast_1d(teleportation_fidelity(np.clip(fef, 0.0, 1.0)))
    return EnsembleResult(times, conc, fef, fid, per, failures, seeds, average)
