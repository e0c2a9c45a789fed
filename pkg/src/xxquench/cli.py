"""Command-line entry point.

Every run is described by a JSON-compatible configuration (``"schema": 1``).
Values can come from ``--config FILE`` and be overridden by flags. Each run
writes ``<output>.csv`` (or ``<output>.json`` with ``--format json``) and a
sidecar ``<output>.meta.json`` holding the fully resolved configuration; the
sidecar can be fed back through ``--config`` to reproduce the data file.

Exit codes: 0 success, 1 numerical failure, 2 configuration error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import platform
import secrets
import sys
import time
from dataclasses import dataclass, field
from functools import partial
from pathlib import Path
from typing import Any

import numpy as np

from . import __version__
from ._parallel import default_workers, parallel_map
from .analysis import (
    alpha_map,
    first_peak,
    fit_line,
    fwhm_alpha,
    linear_grid,
    neel_peak_time,
    scaling_sweep,
    sweep_peak,
    time_sweep,
)
from .disorder import CouplingEnsemble, ensemble_average, flip_disorder_curves
from .entanglement import DISTILLABLE_THRESHOLD, measure_series
from .jacobi import EigensolverError
from .lattice import TWO_PI, BellPairStateSpec, ChainSpec, ProductStateSpec, canted_state, neel_state
from .oracle import MAX_DENSE_SITES, ed_rdm
from .propagator import analytic_propagator, analytic_series, walk_distribution
from .rdm import rdm_series

SCHEMA_VERSION = 1
COMMANDS = (
    "time-sweep",
    "alpha-map",
    "fwhm",
    "scaling",
    "disorder-flip",
    "disorder-coupling",
    "oracle-check",
    "walk",
)
STATES = ("neel", "bell-pairs", "canted", "angles")

# keys each command reads, beyond the common ones
COMMON_KEYS = ("command", "N", "J", "output", "format", "workers")
COMMAND_KEYS = {
    "time-sweep": ("state", "alpha", "angles", "t"),
    "alpha-map": ("alpha_grid", "t"),
    "fwhm": ("N_list", "measure", "baseline", "alpha_grid", "t_opt"),
    "scaling": ("N_list", "family", "t_points"),
    "disorder-flip": ("state", "alpha", "angles", "t", "flip_probs"),
    "disorder-coupling": ("state", "alpha", "angles", "t", "deltas", "realizations", "seed", "average"),
    "oracle-check": ("times", "tolerance"),
    "walk": ("k", "time"),
}
KNOWN_KEYS = set(COMMON_KEYS) | {k for keys in COMMAND_KEYS.values() for k in keys} | {"schema", "meta"}


class ConfigError(ValueError):
    """Invalid run configuration; carries the offending key path."""

    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}")
        self.key = key


@dataclass(frozen=True)
class RunConfig:
    command: str
    params: dict[str, Any] = field(default_factory=dict)

    def __getitem__(self, key: str) -> Any:
        return self.params[key]

    def to_json(self) -> dict[str, Any]:
        return {"schema": SCHEMA_VERSION, "command": self.command, **self.params}


# ---------------------------------------------------------------------------
# validation helpers


def _int(cfg, key, lo=None, hi=None):
    v = cfg[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)) or int(v) != v:
        raise ConfigError(key, f"expected an integer, got {v!r}")
    v = int(v)
    if (lo is not None and v < lo) or (hi is not None and v > hi):
        raise ConfigError(key, f"value {v} outside admissible range [{lo}, {hi if hi is not None else 'inf'}]")
    return v


def _float(cfg, key, lo=None, hi=None, lo_open=False, range_label=None):
    v = cfg[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
        raise ConfigError(key, f"expected a finite number, got {v!r}")
    v = float(v)
    bad_lo = lo is not None and (v <= lo if lo_open else v < lo)
    if bad_lo or (hi is not None and v > hi):
        lb = "(" if lo_open else "["
        label = range_label or f"{lb}{lo}, {hi if hi is not None else 'inf'}]"
        raise ConfigError(key, f"value {v} outside admissible range {label}")
    return v


def _grid(cfg, key, lo=None, hi=None):
    v = cfg[key]
    if not isinstance(v, (list, tuple)) or len(v) != 3:
        raise ConfigError(key, f"expected [start, stop, count], got {v!r}")
    sub = {f"{key}[0]": v[0], f"{key}[1]": v[1], f"{key}[2]": v[2]}
    start = _float(sub, f"{key}[0]", lo, hi)
    stop = _float(sub, f"{key}[1]", lo, hi)
    count = _int(sub, f"{key}[2]", 1)
    if count > 1 and not stop > start:
        raise ConfigError(key, f"grid must be strictly increasing, got start={start}, stop={stop}")
    return [start, stop, count]


def _float_list(cfg, key, lo=None, hi=None):
    v = cfg[key]
    if not isinstance(v, (list, tuple)) or not v:
        raise ConfigError(key, f"expected a non-empty list, got {v!r}")
    return [_float({f"{key}[{i}]": x}, f"{key}[{i}]", lo, hi) for i, x in enumerate(v)]


def _int_list(cfg, key, lo=None, hi=None):
    v = cfg[key]
    if not isinstance(v, (list, tuple)) or not v:
        raise ConfigError(key, f"expected a non-empty list, got {v!r}")
    return [_int({f"{key}[{i}]": x}, f"{key}[{i}]", lo, hi) for i, x in enumerate(v)]


def _choice(cfg, key, options):
    v = cfg[key]
    if v not in options:
        raise ConfigError(key, f"expected one of {list(options)}, got {v!r}")
    return v


def _resolve_state(cfg, out, n):
    state = out["state"] = _choice(cfg, "state", STATES)
    if state == "bell-pairs" and n % 2:
        raise ConfigError("N", f"bell-pairs needs an even number of sites, got N={n}")
    if state == "canted":
        if "alpha" not in cfg:
            raise ConfigError("alpha", "required for state 'canted'")
        out["alpha"] = _float(cfg, "alpha", 0.0, TWO_PI, range_label="[0, 2*pi]")
    if state == "angles":
        if "angles" not in cfg:
            raise ConfigError("angles", "required for state 'angles'")
        out["angles"] = _float_list(cfg, "angles")
        if len(out["angles"]) != n:
            raise ConfigError("angles", f"expected {n} angles (one per site), got {len(out['angles'])}")


def validate(raw: dict[str, Any]) -> RunConfig:
    """Fill defaults and check every key the command reads."""
    unknown = sorted(set(raw) - KNOWN_KEYS)
    if unknown:
        raise ConfigError(unknown[0], "unknown key")
    if "schema" in raw and raw["schema"] != SCHEMA_VERSION:
        raise ConfigError("schema", f"unsupported schema version {raw['schema']!r}, expected {SCHEMA_VERSION}")
    if "command" not in raw or raw["command"] is None:
        raise ConfigError("command", f"missing; expected one of {list(COMMANDS)}")
    command = _choice(raw, "command", COMMANDS)
    allowed = set(COMMON_KEYS) | set(COMMAND_KEYS[command]) | {"schema", "meta"}
    extra = sorted(k for k in raw if k not in allowed and raw[k] is not None)
    if extra:
        raise ConfigError(extra[0], f"not used by command {command!r}")

    cfg = {k: v for k, v in raw.items() if v is not None}
    out: dict[str, Any] = {}
    out["J"] = _float({**{"J": 1.0}, **cfg}, "J", 0.0, lo_open=True)
    out["workers"] = _int({"workers": cfg.get("workers", default_workers())}, "workers", 1)
    out["format"] = _choice({"format": cfg.get("format", "csv")}, "format", ("csv", "json"))
    out["output"] = str(cfg.get("output", command))

    needs_n = command not in ("fwhm", "scaling")
    if needs_n or "N" in cfg:
        if "N" not in cfg:
            raise ConfigError("N", "required")
        out["N"] = _int(cfg, "N", 2)
    n = out.get("N")
    j = out["J"]

    if command in ("time-sweep", "disorder-flip", "disorder-coupling"):
        cfg.setdefault("state", "neel")
        _resolve_state(cfg, out, n)
        cfg.setdefault("t", [0.0, n / (2 * j), 241])
        out["t"] = _grid(cfg, "t", 0.0)
    if command == "alpha-map":
        cfg.setdefault("alpha_grid", [0.0, TWO_PI, 201])
        cfg.setdefault("t", [0.0, n / (2 * j), 241])
        out["alpha_grid"] = _grid(cfg, "alpha_grid", 0.0, TWO_PI)
        out["t"] = _grid(cfg, "t", 0.0)
    if command == "fwhm":
        if "N_list" not in cfg and n is None:
            raise ConfigError("N_list", "required (or give N)")
        out["N_list"] = _int_list(cfg, "N_list", 2) if "N_list" in cfg else [n]
        out["measure"] = _choice({"measure": cfg.get("measure", "fef")}, "measure", ("fef", "concurrence"))
        out["baseline"] = _choice({"baseline": cfg.get("baseline", "background")}, "baseline", ("background", "absolute"))
        cfg.setdefault("alpha_grid", [0.0, TWO_PI, 201])
        out["alpha_grid"] = _grid(cfg, "alpha_grid", 0.0, TWO_PI)
        out["t_opt"] = _float(cfg, "t_opt", 0.0) if "t_opt" in cfg else None
    if command == "scaling":
        if "N_list" not in cfg and n is None:
            raise ConfigError("N_list", "required (or give N)")
        out["N_list"] = _int_list(cfg, "N_list", 2) if "N_list" in cfg else [n]
        out["family"] = _choice({"family": cfg.get("family", "neel")}, "family", ("neel", "bell-pairs"))
        if out["family"] == "bell-pairs":
            odd = [m for m in out["N_list"] if m % 2]
            if odd:
                raise ConfigError("N_list", f"bell-pairs needs even chain lengths, got odd N={odd[0]}")
        out["t_points"] = _int({"t_points": cfg.get("t_points", 241)}, "t_points", 3)
    if command == "disorder-flip":
        if out["state"] == "bell-pairs":
            raise ConfigError("state", "flip disorder needs a product state")
        cfg.setdefault("flip_probs", [0.0, 0.05, 0.10, 0.15])
        out["flip_probs"] = _float_list(cfg, "flip_probs", 0.0, 1.0)
    if command == "disorder-coupling":
        cfg.setdefault("deltas", [0.0, 0.1, 0.2])
        out["deltas"] = _float_list(cfg, "deltas", 0.0)
        out["realizations"] = _int({"realizations": cfg.get("realizations", 100)}, "realizations", 1)
        if "seed" not in cfg:
            cfg["seed"] = secrets.randbits(63)
        out["seed"] = _int(cfg, "seed", 0)
        out["average"] = _choice({"average": cfg.get("average", "measures")}, "average", ("measures", "rho"))
    if command == "oracle-check":
        if n > MAX_DENSE_SITES:
            raise ConfigError("N", f"value {n} outside admissible range [2, {MAX_DENSE_SITES}]")
        cfg.setdefault("times", [0.4, 1.1, 2.7])
        out["times"] = _float_list(cfg, "times", 0.0)
        out["tolerance"] = _float({"tolerance": cfg.get("tolerance", 1e-8)}, "tolerance", 0.0, lo_open=True)
    if command == "walk":
        if "k" not in cfg:
            raise ConfigError("k", "required")
        out["k"] = _int(cfg, "k", 1, n)
        out["time"] = _float({"time": cfg.get("time", n / (4 * j))}, "time", 0.0)
    return RunConfig(command, out)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="xxquench", description=__doc__.splitlines()[0])
    p.add_argument("command", nargs="?", choices=COMMANDS)
    p.add_argument("--config", type=Path, help="JSON run configuration (flags override it)")
    p.add_argument("--N", type=int, dest="N")
    p.add_argument("--J", type=float, dest="J")
    p.add_argument("--state", choices=STATES)
    p.add_argument("--alpha", type=float)
    p.add_argument("--angles", type=float, nargs="+")
    p.add_argument("--t", type=float, nargs=3, metavar=("START", "STOP", "COUNT"))
    p.add_argument("--alpha-grid", type=float, nargs=3, metavar=("START", "STOP", "COUNT"), dest="alpha_grid")
    p.add_argument("--N-list", type=int, nargs="+", dest="N_list")
    p.add_argument("--family", choices=("neel", "bell-pairs"))
    p.add_argument("--t-points", type=int, dest="t_points")
    p.add_argument("--measure", choices=("fef", "concurrence"))
    p.add_argument("--baseline", choices=("background", "absolute"))
    p.add_argument("--t-opt", type=float, dest="t_opt")
    p.add_argument("--flip-probs", type=float, nargs="+", dest="flip_probs", help="total flip probabilities N*eps")
    p.add_argument("--deltas", type=float, nargs="+")
    p.add_argument("--realizations", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--average", choices=("measures", "rho"))
    p.add_argument("--times", type=float, nargs="+")
    p.add_argument("--tolerance", type=float)
    p.add_argument("--k", type=int)
    p.add_argument("--time", type=float)
    p.add_argument("--output", "-o", help="output path prefix")
    p.add_argument("--format", choices=("csv", "json"))
    p.add_argument("--workers", type=int)
    return p


def parse_config(argv: list[str] | None = None) -> RunConfig:
    """Merge an optional JSON config file with command-line flags and validate."""
    args = build_parser().parse_args(argv)
    raw: dict[str, Any] = {}
    if args.config is not None:
        try:
            raw = json.loads(args.config.read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError("config", f"cannot read {args.config}: {exc}") from exc
        if not isinstance(raw, dict):
            raise ConfigError("config", "top level must be a JSON object")
    for key, value in vars(args).items():
        if key == "config" or value is None:
            continue
        if key in ("t", "alpha_grid"):
            value = [value[0], value[1], int(value[2]) if float(value[2]).is_integer() else value[2]]
        raw[key] = value
    return validate(raw)


# ---------------------------------------------------------------------------
# commands


def _initial_state(cfg: RunConfig):
    n, state = cfg["N"], cfg["state"]
    if state == "neel":
        return neel_state(n)
    if state == "bell-pairs":
        return BellPairStateSpec.for_sites(n)
    if state == "canted":
        return canted_state(n, cfg["alpha"])
    return ProductStateSpec(tuple(cfg["angles"]))


def _measure_rows(prefix: dict[str, Any], times: np.ndarray, m: dict[str, np.ndarray]) -> list[dict]:
    rows = []
    for i, t in enumerate(times):
        rows.append(
            {
                **prefix,
                "t": float(t),
                "concurrence": float(m["concurrence"][i]),
                "fef": float(m["fef"][i]),
                "fidelity": float(m["fidelity"][i]),
                "distillable": int(m["fef"][i] > DISTILLABLE_THRESHOLD),
            }
        )
    return rows


def _peak_json(peak) -> dict[str, Any]:
    return {"t_max": peak.t_max, "f_max": peak.f_max, "c_max": peak.c_max, "above_threshold": peak.above_threshold}


def _cmd_time_sweep(cfg):
    grid = time_sweep(_initial_state(cfg), ChainSpec(cfg["N"], cfg["J"]), linear_grid(*cfg["t"]))
    rows = [{k: v for k, v in r.items() if k != "failed"} for r in grid.rows()]
    return rows, {"peak": _peak_json(sweep_peak(grid, cfg["N"]))}, 0


def _cmd_alpha_map(cfg):
    grid = alpha_map(cfg["N"], linear_grid(*cfg["alpha_grid"]), linear_grid(*cfg["t"]), cfg["J"], cfg["workers"])
    rows = [{k: v for k, v in r.items() if k != "failed"} for r in grid.rows()]
    return rows, {}, 0


def _fwhm_one(n, cfg):
    res = fwhm_alpha(
        n,
        cfg["t_opt"],
        cfg["J"],
        measure=cfg["measure"],
        baseline=cfg["baseline"],
        alpha_grid=linear_grid(*cfg["alpha_grid"]),
    )
    t_opt = cfg["t_opt"]
    if t_opt is None:
        t_opt = neel_peak_time(n, cfg["J"])
    m = measure_series(rdm_series(neel_state(n), analytic_propagator(ChainSpec(n, cfg["J"]), t_opt)))
    return {
        "N": n,
        "t_opt": t_opt,
        "fwhm": res.width,
        "alpha_left": res.left,
        "alpha_right": res.right,
        "peak": res.peak,
        "baseline": res.baseline,
        "concurrence": float(m["concurrence"][0]),
        "fef": float(m["fef"][0]),
        "fidelity": float(m["fidelity"][0]),
        "distillable": int(m["fef"][0] > DISTILLABLE_THRESHOLD),
    }


def _cmd_fwhm(cfg):
    rows = parallel_map(partial(_fwhm_one, cfg=cfg), cfg["N_list"], cfg["workers"])
    return rows, {}, 0


def _cmd_scaling(cfg):
    peaks = scaling_sweep(cfg["N_list"], cfg["family"], cfg["J"], cfg["t_points"], cfg["workers"])
    rows = []
    for n, pk in zip(cfg["N_list"], peaks):
        rows.append(
            {
                "N": n,
                "t_max": pk.t_max,
                "concurrence": pk.c_max,
                "fef": pk.f_max,
                "fidelity": (2 * pk.f_max + 1) / 3,
                "distillable": int(pk.f_max > DISTILLABLE_THRESHOLD),
                "above_threshold": int(pk.above_threshold),
            }
        )
    extra = {}
    if len(rows) >= 2:
        slope, intercept = fit_line([r["N"] for r in rows], [r["t_max"] for r in rows])
        extra["t_max_fit"] = {"slope": slope, "intercept": intercept, "expected_slope": 1 / (4 * cfg["J"])}
    return rows, extra, 0


def _cmd_disorder_flip(cfg):
    times = linear_grid(*cfg["t"])
    base = _initial_state(cfg)
    n = cfg["N"]
    curves = flip_disorder_curves(base, cfg["flip_probs"], analytic_series(ChainSpec(n, cfg["J"]), times))
    rows, peaks = [], {}
    for p in cfg["flip_probs"]:
        m = measure_series(curves[p])
        rows += _measure_rows({"flip_prob": p}, times, m)
        peaks[repr(p)] = _peak_json(first_peak(times, m["fef"], m["concurrence"], n_sites=n))
    return rows, {"peaks": peaks}, 0


def _cmd_disorder_coupling(cfg):
    times = linear_grid(*cfg["t"])
    spec = ChainSpec(cfg["N"], cfg["J"])
    init = _initial_state(cfg)
    rows, peaks, failures = [], {}, {}
    for delta in cfg["deltas"]:
        ens = CouplingEnsemble(delta, cfg["realizations"], cfg["seed"])
        res = ensemble_average(ens, spec, init, times, cfg["average"], cfg["workers"])
        m = {"concurrence": res.concurrence, "fef": res.fef, "fidelity": res.fidelity}
        rows += _measure_rows({"delta": delta}, times, m)
        peaks[repr(delta)] = _peak_json(first_peak(times, res.fef, res.concurrence, n_sites=cfg["N"]))
        if res.failures:
            failures[repr(delta)] = {str(r): msg for r, msg in res.failures.items()}
    return rows, {"peaks": peaks, "failures": failures}, 1 if failures else 0


def _cmd_oracle_check(cfg):
    n = cfg["N"]
    spec = ChainSpec(n, cfg["J"])
    rng = np.random.default_rng(0)
    states = {
        "neel": neel_state(n),
        "canted-0.3": canted_state(n, 0.3),
        "canted-pi/2": canted_state(n, math.pi / 2),
        "canted-4.0": canted_state(n, 4.0),
        "random-angles": ProductStateSpec(tuple(rng.uniform(0, TWO_PI, n))),
    }
    if n % 2 == 0:
        states["bell-pairs"] = BellPairStateSpec.for_sites(n)
    rows, worst = [], 0.0
    for name, init in states.items():
        for t in cfg["times"]:
            engine = rdm_series(init, analytic_propagator(spec, t))[0]
            exact = ed_rdm(init, spec.uniform(), t).entries
            dev = float(np.abs(engine - exact).max())
            worst = max(worst, dev)
            m = measure_series(engine[np.newaxis])
            rows += [{"state": name, **r, "max_deviation": dev} for r in _measure_rows({}, np.array([t]), m)]
    print(f"max entrywise deviation engine vs ED (N={n}): {worst:.3e}")
    return rows, {"max_deviation": worst}, 0 if worst < cfg["tolerance"] else 1


def _cmd_walk(cfg):
    prop = analytic_propagator(ChainSpec(cfg["N"], cfg["J"]), cfg["time"])
    probs = walk_distribution(prop, cfg["k"])
    rows = [{"l": l, "probability": float(p)} for l, p in enumerate(probs, start=1)]
    return rows, {"total_probability": math.fsum(probs)}, 0


DISPATCH = {
    "time-sweep": _cmd_time_sweep,
    "alpha-map": _cmd_alpha_map,
    "fwhm": _cmd_fwhm,
    "scaling": _cmd_scaling,
    "disorder-flip": _cmd_disorder_flip,
    "disorder-coupling": _cmd_disorder_coupling,
    "oracle-check": _cmd_oracle_check,
    "walk": _cmd_walk,
}


def _fmt(v):
    if isinstance(v, float):
        return format(v, ".17g")
    return str(v)


def rows_to_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    if not rows:
        return ""
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(list(rows[0]))
    for r in rows:
        writer.writerow([_fmt(v) for v in r.values()])
    return buf.getvalue()


def output_paths(cfg: RunConfig) -> tuple[Path, Path]:
    prefix = cfg["output"]
    for ext in (".csv", ".json"):
        if prefix.endswith(ext):
            prefix = prefix[: -len(ext)]
    data = Path(prefix + (".csv" if cfg["format"] == "csv" else ".json"))
    return data, Path(prefix + ".meta.json")


def run(cfg: RunConfig) -> int:
    """Execute a validated configuration, write outputs, return the exit code."""
    started = time.perf_counter()
    rows, extra, code = DISPATCH[cfg.command](cfg)
    elapsed = time.perf_counter() - started
    data_path, meta_path = output_paths(cfg)
    data_path.parent.mkdir(parents=True, exist_ok=True)
    if cfg["format"] == "csv":
        data_path.write_text(rows_to_csv(rows))
    else:
        data_path.write_text(json.dumps(rows, indent=1) + "\n")
    sidecar = cfg.to_json()
    sidecar["meta"] = {
        "library": "xxquench",
        "version": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "seed": cfg.params.get("seed"),
        "elapsed_seconds": elapsed,
        "data_file": data_path.name,
        "rows": len(rows),
        "exit_code": code,
        **extra,
    }
    meta_path.write_text(json.dumps(sidecar, indent=2) + "\n")
    return code


def main(argv: list[str] | None = None) -> int:
    try:
        cfg = parse_config(argv)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    try:
        return run(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (EigensolverError, RuntimeError, FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
