"""Command-line front end: ``surfwarp warp|execute|sweep``.

Exit codes: 0 success, 1 partial sweep failure, 2 configuration error.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import config as cfgmod
from .contact_sim import EventKind, env_from_scenario, load_scenario, parse_scenario
from .errors import ConfigError, DomainError
from .metrics import PairSummary, export_summary, summarize_pairs
from .offline_warp import export_trajectory, warp
from .online_exec import execute_trajectory, execution_summary, export_execution
from .pipeline import run_pair


def _write_json(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _out_dir(arg: str | None) -> Path:
    out = arg or os.environ.get("SURFWARP_OUT")
    if not out:
        raise ConfigError("no output directory: pass --out or set SURFWARP_OUT")
    path = Path(out)
    if not path.is_dir():
        raise ConfigError(f"output directory {out} does not exist")
    if not os.access(path, os.W_OK):
        raise ConfigError(f"output directory {out} is not writable")
    return path


def cmd_warp(cfg: dict, out: Path) -> int:
    try:
        res = run_pair(cfg, jacobian_check=True)
    except DomainError as exc:
        raise ConfigError(str(exc)) from exc
    export_trajectory(out / "tiled.csv", res["tiled"])
    export_trajectory(out / "warped.csv", res["warped"])
    _write_json(out / "report.json", res["report"])
    return 0


def cmd_execute(cfg: dict, out: Path, scenario: dict) -> int:
    try:
        surface = cfgmod.surface_of(cfg)
        guide = cfgmod.guide_of(cfg, surface)
        _, warped = warp(cfgmod.primitive_of(cfg), guide, surface, cfgmod.deform_of(cfg), cfg.get("tile_tol"))
    except DomainError as exc:
        raise ConfigError(str(exc)) from exc
    params = cfgmod.exec_of(cfg)
    K = len(warped)
    for ev in scenario["events"]:
        if ev.at_step >= K:
            raise ConfigError(f"event at step {ev.at_step} is past the trajectory end ({K} steps)")
    env = env_from_scenario(surface, scenario)
    log = execute_trajectory(warped, env, params)
    drops = [ev.at_step for ev in scenario["events"] if ev.kind is EventKind.HEIGHT_DROP]
    summary = execution_summary(log, params, drops[0] if drops else None)
    summary["deviation_within_theta"] = summary["max_deviation_rad"] <= params.theta + 1e-9
    export_execution(out / "execution.csv", log)
    _write_json(out / "summary.json", summary)
    return 0 if log.status == "ok" else 1


def _sweep_one(item):
    fam, idx, run_cfg, jac = item
    try:
        res = run_pair(run_cfg, jacobian_check=jac)
    except (ConfigError, DomainError, ValueError) as exc:
        return fam, idx, None, f"{type(exc).__name__}: {exc}"
    return fam, idx, res, None


def cmd_sweep(cfg: dict, out: Path) -> int:
    runs = cfgmod.sweep_runs(cfg)
    jac = bool(cfg["sweep"].get("jacobian_check", True))
    workers = int(cfg["sweep"].get("workers", 1))
    items = [(fam, idx, run, jac) for fam, idx, run in runs]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_sweep_one, items))
    else:
        results = [_sweep_one(it) for it in items]

    runs_dir = out / "runs"
    runs_dir.mkdir(exist_ok=True)
    by_family: dict[str, list] = {}
    status: dict[str, list[str]] = {}
    run_index = []
    for fam, idx, res, err in results:
        name = f"{fam}_{idx:02d}"
        by_family.setdefault(fam, [])
        status.setdefault(fam, [])
        entry = {"run": name, "family": fam, "status": "ok" if err is None else "failed"}
        if err is not None:
            status[fam].append(f"{name}: {err}")
            entry["error"] = err
            run_index.append(entry)
            continue
        rd = runs_dir / name
        rd.mkdir(exist_ok=True)
        export_trajectory(rd / "tiled.csv", res["tiled"])
        export_trajectory(rd / "warped.csv", res["warped"])
        _write_json(rd / "report.json", res["report"])
        t_col, w_col = res["collisions"]
        by_family[fam].append((res["tiled_rep"], res["warped_rep"], t_col, w_col))
        entry.update(res["report"])
        run_index.append(entry)

    rows, extra = [], []
    for fam in by_family:
        if by_family[fam]:
            rows.append(summarize_pairs(by_family[fam], fam))
        else:
            rows.append(PairSummary(fam, 0, 0, math.nan, math.nan, math.nan, math.nan, 0, 0))
        extra.append({"status": "ok" if not status[fam] else f"failed({len(status[fam])})"})
    export_summary(out / "summary_table.csv", rows, extra)
    _write_json(
        out / "summary.json",
        {
            "seed": cfg.get("seed", 0),
            "bad_rate_aggregation": "step-weighted pooled over pairs",
            "median_delta_p95": "median over pairs of warped minus tiled p95, degrees",
            "runs": run_index,
        },
    )
    return 1 if any(status.values()) else 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="surfwarp", description=__doc__.splitlines()[0])
    p.add_argument("command", choices=["warp", "execute", "sweep"])
    p.add_argument("--config", help="JSON config file (defaults built in)")
    p.add_argument("--out", help="existing output directory (default: $SURFWARP_OUT)")
    p.add_argument("--scenario", help="JSON scenario file for execute")
    p.add_argument("--seed", type=int, help="override config and scenario seeds")
    p.add_argument("--set", action="append", default=[], metavar="K=V", help="override a config key (repeatable)")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = cfgmod.load_config(args.config, args.set)
        if args.seed is not None:
            cfg["seed"] = args.seed
        out = _out_dir(args.out)
        if args.command == "warp":
            return cmd_warp(cfg, out)
        if args.command == "execute":
            scenario = load_scenario(args.scenario) if args.scenario else parse_scenario(cfg["scenario"])
            if args.seed is not None:
                scenario["seed"] = args.seed
            return cmd_execute(cfg, out, scenario)
        return cmd_sweep(cfg, out)
    except ConfigError as exc:
        print(f"surfwarp: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
