"""Sweeps over time, canting angle and chain length, plus peak statistics."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import partial
from typing import Callable, Iterator, Sequence, Union

import numpy as np

from ._parallel import parallel_map
from .entanglement import DISTILLABLE_THRESHOLD, measure_series
from .lattice import TWO_PI, BellPairStateSpec, ChainSpec, CouplingProfile, canted_state, neel_state
from .propagator import analytic_propagator, analytic_series, propagator_series
from .rdm import InitialState, rdm_series

DEFAULT_T_POINTS = 241
DEFAULT_ALPHA_POINTS = 201
MEASURES = ("concurrence", "fef", "fidelity")


class NoPeakError(ValueError):
    """The curve has no maximum above its baseline."""


def linear_grid(start: float, stop: float, count: int) -> np.ndarray:
    if int(count) != count or count < 1:
        raise ValueError(f"grid count must be a positive integer, got {count!r}")
    if count > 1 and not stop > start:
        raise ValueError(f"grid must be strictly increasing (start={start}, stop={stop})")
    return np.linspace(float(start), float(stop), int(count))


def default_time_grid(n: int, j: float = 1.0, count: int = DEFAULT_T_POINTS) -> np.ndarray:
    return linear_grid(0.0, n / (2.0 * j), count)


def default_alpha_grid(count: int = DEFAULT_ALPHA_POINTS) -> np.ndarray:
    return linear_grid(0.0, TWO_PI, count)


@dataclass
class SweepGrid:
    """Measures on a rectangular grid; ``axes`` are ordered as the array dimensions."""

    axes: dict[str, np.ndarray]
    concurrence: np.ndarray
    fef: np.ndarray
    fidelity: np.ndarray
    failed: np.ndarray | None = None

    def __post_init__(self):
        shape = tuple(len(v) for v in self.axes.values())
        for name, ax in self.axes.items():
            if len(ax) > 1 and not np.all(np.diff(ax) > 0):
                raise ValueError(f"axis {name!r} is not strictly increasing")
        for m in MEASURES:
            if getattr(self, m).shape != shape:
                raise ValueError(f"{m} has shape {getattr(self, m).shape}, expected {shape}")
        if self.failed is None:
            self.failed = np.zeros(shape, dtype=bool)

    def rows(self) -> Iterator[dict]:
        names = list(self.axes)
        for idx in np.ndindex(*self.fef.shape):
            row = {name: float(self.axes[name][i]) for name, i in zip(names, idx)}
            row["concurrence"] = float(self.concurrence[idx])
            row["fef"] = float(self.fef[idx])
            row["fidelity"] = float(self.fidelity[idx])
            row["distillable"] = int(self.fef[idx] > DISTILLABLE_THRESHOLD)
            row["failed"] = int(self.failed[idx])
            yield row


@dataclass(frozen=True)
class PeakSummary:
    t_max: float
    f_max: float
    c_max: float
    above_threshold: bool = True
    n_sites: int | None = None


Source = Union[ChainSpec, CouplingProfile]


def time_sweep(init: InitialState, source: Source, t_grid: Sequence[float]) -> SweepGrid:
    times = np.asarray(t_grid, dtype=float)
    m = measure_series(rdm_series(init, propagator_series(source, times)))
    return SweepGrid({"t": times}, m["concurrence"], m["fef"], m["fidelity"])


def _alpha_column(alpha: float, n: int, j: float, times: np.ndarray) -> dict[str, np.ndarray]:
    return measure_series(rdm_series(canted_state(n, alpha), analytic_series(ChainSpec(n, j), times)))


def alpha_map(
    n: int,
    alpha_grid: Sequence[float],
    t_grid: Sequence[float],
    j: float = 1.0,
    workers: int | None = 1,
) -> SweepGrid:
    """Concurrence and FEF of canted initial states on an (alpha, t) grid."""
    alphas = np.asarray(alpha_grid, dtype=float)
    times = np.asarray(t_grid, dtype=float)
    cols = parallel_map(partial(_alpha_column, n=n, j=j, times=times), list(alphas), workers)
    stack = {m: np.stack([col[m] for col in cols]) for m in MEASURES}
    return SweepGrid({"alpha": alphas, "t": times}, stack["concurrence"], stack["fef"], stack["fidelity"])


def first_peak(
    times: Sequence[float],
    fef: Sequence[float],
    concurrence: Sequence[float] | None = None,
    threshold: float = DISTILLABLE_THRESHOLD,
    n_sites: int | None = None,
) -> PeakSummary:
    """First local FEF maximum above ``threshold``, refined by a parabola.

    Falls back to the global maximum, flagged ``above_threshold=False``,
    when no local maximum exceeds the threshold.
    """
    t = np.asarray(times, dtype=float)
    f = np.asarray(fef, dtype=float)
    cc = np.zeros_like(f) if concurrence is None else np.asarray(concurrence, dtype=float)
    idx = None
    for i in range(1, len(f) - 1):
        if f[i] > threshold and f[i] >= f[i - 1] and f[i] > f[i + 1]:
            idx = i
            break
    above = idx is not None
    if idx is None:
        idx = int(np.argmax(f))
    t_ref, f_ref = t[idx], f[idx]
    c_ref = cc[idx]
    if 0 < idx < len(f) - 1:
        t_ref, f_ref = _parabolic_vertex(t[idx - 1 : idx + 2], f[idx - 1 : idx + 2])
        _, c_ref = _parabolic_vertex(t[idx - 1 : idx + 2], cc[idx - 1 : idx + 2], at=t_ref)
        c_ref = max(c_ref, 0.0)
    return PeakSummary(float(t_ref), float(f_ref), float(c_ref), above, n_sites)


def _parabolic_vertex(x: np.ndarray, y: np.ndarray, at: float | None = None) -> tuple[float, float]:
    coeffs = np.polyfit(x - x[1], y, 2)
    a, b, _ = coeffs
    if at is not None:
        return at, float(np.polyval(coeffs, at - x[1]))
    if a >= 0:
        return float(x[1]), float(y[1])
    dx = float(np.clip(-b / (2 * a), x[0] - x[1], x[2] - x[1]))
    return float(x[1] + dx), float(max(np.polyval(coeffs, dx), y[1]))


def sweep_peak(grid: SweepGrid, n_sites: int | None = None) -> PeakSummary:
    return first_peak(grid.axes["t"], grid.fef, grid.concurrence, n_sites=n_sites)


def family_state(family: str, n: int) -> InitialState:
    if family == "neel":
        return neel_state(n)
    if family in ("bell", "bell-pairs"):
        return BellPairStateSpec.for_sites(n)
    raise ValueError(f"unknown state family {family!r}")


def _scaling_point(n: int, family: str, j: float, count: int) -> PeakSummary:
    spec = ChainSpec(n, j)
    grid = time_sweep(family_state(family, n), spec, default_time_grid(n, j, count))
    return sweep_peak(grid, n_sites=n)


def scaling_sweep(
    n_list: Sequence[int],
    family: str = "neel",
    j: float = 1.0,
    count: int = DEFAULT_T_POINTS,
    workers: int | None = 1,
) -> list[PeakSummary]:
    """First-peak time and height for every chain length, searched on [0, N/(2J)]."""
    return parallel_map(partial(_scaling_point, family=family, j=j, count=count), list(n_list), workers)


def fit_line(x: Sequence[float], y: Sequence[float]) -> tuple[float, float]:
    """Least-squares slope and intercept."""
    slope, intercept = np.polyfit(np.asarray(x, float), np.asarray(y, float), 1)
    return float(slope), float(intercept)


@dataclass(frozen=True)
class FwhmResult:
    width: float
    left: float
    right: float
    peak: float
    baseline: float
    half: float
    convention: str = "background"


def curve_fwhm(
    func: Callable[[float], float],
    grid: Sequence[float],
    center: float,
    baseline: str = "background",
    tol: float = 1e-5,
) -> FwhmResult:
    """Full width at half maximum of the peak of ``func`` at ``center``.

    The half level is measured above the grid minimum (``"background"``) or
    above zero (``"absolute"``). Starting from ``center`` the grid is walked
    outward to the first point below half, and each crossing is then
    bisected to ``tol``.
    """
    if baseline not in ("background", "absolute"):
        raise ValueError(f"baseline must be 'background' or 'absolute', got {baseline!r}")
    xs = np.asarray(grid, dtype=float)
    values = np.array([func(x) for x in xs])
    peak = float(func(center))
    base = float(min(values.min(), peak)) if baseline == "background" else 0.0
    if not peak > base:
        raise NoPeakError(f"no peak above the baseline at {center} (peak={peak}, baseline={base})")
    half = base + 0.5 * (peak - base)

    def crossing(direction: int) -> float:
        side = xs[xs > center] if direction > 0 else xs[xs < center][::-1]
        inside = center
        for x, v in zip(side, values[np.isin(xs, side)][:: 1 if direction > 0 else -1]):
            if v < half:
                lo, hi = inside, x
                while abs(hi - lo) > tol:
                    mid = 0.5 * (lo + hi)
                    if func(mid) >= half:
                        lo = mid
                    else:
                        hi = mid
                return 0.5 * (lo + hi)
            inside = x
        raise NoPeakError(f"curve never drops below half maximum on the {'right' if direction > 0 else 'left'}")

    left, right = crossing(-1), crossing(+1)
    return FwhmResult(right - left, left, right, peak, base, half, baseline)


def _alpha_measure(alpha: float, n: int, prop, measure: str) -> float:
    alpha = min(max(alpha, 0.0), TWO_PI)
    return float(measure_series(rdm_series(canted_state(n, alpha), prop))[measure][0])


def neel_peak_time(n: int, j: float = 1.0, count: int = DEFAULT_T_POINTS) -> float:
    return _scaling_point(n, "neel", j, count).t_max


def fwhm_alpha(
    n: int,
    t_opt: float | None = None,
    j: float = 1.0,
    measure: str = "fef",
    baseline: str = "background",
    alpha_grid: Sequence[float] | None = None,
    tol: float = 1e-5,
) -> FwhmResult:
    """Width in alpha of the entanglement peak at the Neel point, at time ``t_opt``.

    ``t_opt`` defaults to the refined first FEF peak of the Neel state.
    """
    if measure not in ("fef", "concurrence"):
        raise ValueError(f"measure must be 'fef' or 'concurrence', got {measure!r}")
    if t_opt is None:
        t_opt = neel_peak_time(n, j)
    prop = analytic_propagator(ChainSpec(n, j), t_opt)
    grid = default_alpha_grid() if alpha_grid is None else np.asarray(alpha_grid, dtype=float)
    return curve_fwhm(partial(_alpha_measure, n=n, prop=prop, measure=measure), grid, math.pi, baseline, tol)
