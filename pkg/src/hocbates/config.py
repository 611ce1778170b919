"""Flat ``key = value`` run configuration.

Blank lines and ``#`` comments are ignored. Keys are case-insensitive; unknown keys
are an error so that typos do not silently fall back to defaults.
"""

from __future__ import annotations

from dataclasses import dataclass, fields

from .grid import build_grid
from .model import ModelParams
from .solver import SolverConfig

MODEL_KEYS = {f.name for f in fields(ModelParams)}
ALIASES = {"lambda": "lam", "ratio": "parabolic_ratio"}
GRID_KEYS = {"R1", "L2", "R2", "h", "parabolic_ratio"}
SOLVER_KEYS = {"scheme", "mu", "smoothing", "rannacher", "transform", "dirichlet", "jump_weighting", "tail"}
RUN_KEYS = {"h_ref", "bump", "workers"}
SCHEMES = {"hoc": "hoc", "fd2": "second_order", "second_order": "second_order"}


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    solver: SolverConfig
    h_ref: float = 0.025
    bump: float = 0.005
    workers: int = 1


def _canonical(key: str) -> str:
    k = key.strip()
    if k in GRID_KEYS:
        return k
    low = k.lower()
    for g in GRID_KEYS:
        if g.lower() == low:
            return g
    return ALIASES.get(low, low)


def _parse_bool(text: str) -> bool:
    low = text.lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"not a boolean: {text!r}")


def parse_pairs(text: str, source: str = "<config>") -> dict[str, str]:
    out = {}
    for n, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{n}: expected key = value, got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        key = _canonical(key)
        if key not in MODEL_KEYS | GRID_KEYS | SOLVER_KEYS | RUN_KEYS:
            raise ConfigError(f"{source}:{n}: unknown key {key!r}")
        if key in out:
            raise ConfigError(f"{source}:{n}: duplicate key {key!r}")
        out[key] = value
    return out


def build_run_config(pairs: dict[str, str]) -> RunConfig:
    """Turn string pairs (from a file or the command line) into validated objects."""
    pairs = {_canonical(k): v for k, v in pairs.items() if v is not None}
    try:
        model = ModelParams(**{k: float(pairs[k]) for k in MODEL_KEYS if k in pairs})
        grid_kw = {k: float(pairs[k]) for k in GRID_KEYS if k in pairs}
        grid = build_grid(maturity=model.maturity, **grid_kw)
        solver_kw = {}
        if "scheme" in pairs:
            if pairs["scheme"].lower() not in SCHEMES:
                raise ConfigError(f"unknown scheme {pairs['scheme']!r}; expected hoc or fd2")
            solver_kw["scheme"] = SCHEMES[pairs["scheme"].lower()]
        if "mu" in pairs:
            solver_kw["mu"] = float(pairs["mu"])
        for key in ("smoothing", "rannacher"):
            if key in pairs:
                solver_kw[key] = _parse_bool(pairs[key])
        for key in ("transform", "dirichlet", "jump_weighting", "tail"):
            if key in pairs:
                solver_kw[key] = pairs[key]
        if solver_kw.get("transform", "consistent") not in ("consistent", "paper-literal"):
            raise ConfigError(f"unknown transform {solver_kw['transform']!r}")
        solver = SolverConfig(params=model, grid=grid, **solver_kw)
        run = RunConfig(solver)
        if "h_ref" in pairs:
            run.h_ref = float(pairs["h_ref"])
        if "bump" in pairs:
            run.bump = float(pairs["bump"])
            if run.bump < 0:
                raise ConfigError("bump must be non-negative")
        if "workers" in pairs:
            run.workers = int(pairs["workers"])
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    return run


def load_config(path) -> dict[str, str]:
    with open(path) as fh:
        return parse_pairs(fh.read(), str(path))
