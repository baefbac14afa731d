"""JSON run/sweep configuration with dotted ``key=value`` overrides."""

from __future__ import annotations

import copy
import itertools
import json
from dataclasses import fields

from .errors import ConfigError
from .geometry import Surface, build_guide
from .offline_warp import DeformParams, PrimitiveConfig
from .online_exec import ExecParams

DEFAULT_CONFIG = {
    "surface": {"family": "sin", "amplitude": 0.06, "frequency": 8.0, "scale": 1.0, "height_offset": 0.0},
    "guide": {"x_start": 0.0, "x_end": 2.4, "n": 2001},
    "primitive": {"n_waypoints": 8, "lift_height": 0.03, "period_length": 0.2, "tool_length": 0.1},
    "deform": {f.name: f.default for f in fields(DeformParams)},
    "exec": {f.name: (list(f.default) if isinstance(f.default, tuple) else f.default) for f in fields(ExecParams)},
    "tile_tol": None,
    "collision": {"clearance_tol": 0.001, "samples_per_axis": 32},
    "bad_step_deg": 10.0,
    "seed": 0,
    "scenario": {"stiffness": 20.0, "noise_sigma": 0.0, "seed": 0, "events": []},
    "sweep": {
        "workers": 1,
        "jacobian_check": True,
        "families": {
            "sin": {"x_start": 0.0, "x_end": 2.4, "amplitude": [0.05, 0.06], "frequency": [7.0, 8.0]},
            "cos": {"x_start": 0.0, "x_end": 2.4, "amplitude": [0.05, 0.06], "frequency": [7.0, 8.0]},
            "parabolic": {"x_start": -0.6, "x_end": 0.6, "amplitude": [0.75, 1.0, 1.25, 1.5]},
            "exp": {"x_start": -1.0, "x_end": 1.0, "amplitude": [0.2, 0.3], "scale": [5.0, 10.0]},
            "cubic": {"x_start": -1.0, "x_end": 1.0, "amplitude": [0.02]},
        },
    },
}

GRID_KEYS = ("amplitude", "frequency", "scale")


def merge(base: dict, over: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict) and k != "families":
            out[k] = merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def apply_override(cfg: dict, assignment: str) -> None:
    """Apply one ``a.b.c=value``; the value is parsed as JSON, else kept as a string."""
    if "=" not in assignment:
        raise ConfigError(f"--set expects KEY=VALUE, got {assignment!r}")
    key, raw = assignment.split("=", 1)
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    parts = key.strip().split(".")
    node = cfg
    for p in parts[:-1]:
        if not isinstance(node.get(p), dict):
            raise ConfigError(f"unknown config section {key!r}")
        node = node[p]
    node[parts[-1]] = value


def load_config(path=None, overrides=()) -> dict:
    cfg = copy.deepcopy(DEFAULT_CONFIG)
    if path is not None:
        try:
            with open(path) as fh:
                user = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        if not isinstance(user, dict):
            raise ConfigError("config must be a JSON object")
        unknown = set(user) - set(DEFAULT_CONFIG)
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        cfg = merge(cfg, user)
    for o in overrides:
        apply_override(cfg, o)
    return cfg


def _build(cls, data, what):
    try:
        return cls(**data)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid {what}: {exc}") from exc


def surface_of(cfg: dict) -> Surface:
    return _build(Surface, cfg["surface"], "surface")


def guide_of(cfg: dict, surface: Surface):
    g = cfg["guide"]
    try:
        return build_guide(surface, float(g["x_start"]), float(g["x_end"]), int(g["n"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"invalid guide: {exc}") from exc


def primitive_of(cfg: dict) -> PrimitiveConfig:
    return _build(PrimitiveConfig, cfg["primitive"], "primitive")


def deform_of(cfg: dict) -> DeformParams:
    return _build(DeformParams, cfg["deform"], "deform params")


def exec_of(cfg: dict) -> ExecParams:
    data = dict(cfg["exec"])
    for k in ("g_hat", "e_c"):
        if k in data:
            data[k] = tuple(data[k])
    return _build(ExecParams, data, "exec params")


def sweep_runs(cfg: dict) -> list[tuple[str, int, dict]]:
    """Expand per-family grids into ``(family, index, run_config)``, in a fixed order."""
    fams = cfg["sweep"].get("families") or {}
    if not fams:
        raise ConfigError("sweep needs at least one family")
    runs = []
    for fam, grid in fams.items():
        if not isinstance(grid, dict):
            raise ConfigError(f"family {fam!r} grid must be an object")
        axes = []
        for key in GRID_KEYS:
            vals = grid.get(key, [cfg["surface"][key]])
            vals = vals if isinstance(vals, list) else [vals]
            if not vals:
                raise ConfigError(f"empty grid for {fam}.{key}")
            axes.append([(key, v) for v in vals])
        for idx, combo in enumerate(itertools.product(*axes)):
            run = copy.deepcopy(cfg)
            run["surface"] = dict(cfg["surface"], family=fam, **dict(combo))
            for gk in ("x_start", "x_end", "n"):
                if gk in grid:
                    run["guide"][gk] = grid[gk]
            runs.append((fam, idx, run))
    return runs
