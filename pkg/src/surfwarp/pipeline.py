"""Paired tiled/warped evaluation shared by the CLI, the sweep and the demos."""

from __future__ import annotations

import math

import numpy as np

from . import config as cfgmod
from .metrics import collision_count, continuity
from .offline_warp import warp


def probe_points(points: np.ndarray, offset: float) -> np.ndarray:
    """A 3x3x3 lattice of probes (pitch ``offset``) around every track sample."""
    g = np.array([-1.0, 0.0, 1.0]) * offset
    lattice = np.array(np.meshgrid(g, g, g, indexing="ij")).reshape(3, -1).T
    return (points[:, None, :] + lattice[None, :, :]).reshape(-1, 3)


def deformation_checks(tiled, warped, dmap, spacing: float) -> dict:
    """Anchoring, step-cap and finite-difference Jacobian checks on one warp."""
    tip0 = tiled.positions
    anchored = bool(np.array_equal(warped.tip[tiled.contact_set], tip0[tiled.contact_set]))
    ratio = max((s / b for s, b in zip(dmap.max_step, dmap.step_bound)), default=0.0)
    h = spacing / 10.0
    dets_tip = dmap.jacobian_dets(probe_points(tip0, 0.5 * spacing), h, "tip")
    # The first base field is centred on the undeformed base track.
    base_start = dmap.base_fields[0].centers if dmap.base_fields else warped.base
    dets_base = dmap.jacobian_dets(probe_points(base_start, 0.5 * spacing), h, "base")
    return {
        "anchoring_exact": anchored,
        "max_step_over_spacing": ratio,
        "jacobian_min_det_tip": float(dets_tip.min()),
        "jacobian_min_det_base": float(dets_base.min()),
        "iterations": dmap.iterations,
    }


def _track_report(poses, L, surface, cfg) -> tuple[dict, object, int]:
    rep = continuity(poses, math.radians(cfg["bad_step_deg"]))
    col = collision_count(
        poses, L, surface, cfg["collision"]["clearance_tol"], int(cfg["collision"]["samples_per_axis"])
    )
    out = {
        "p95_deg": math.degrees(rep.p95),
        "bad_rate": rep.bad_rate,
        "n_steps": rep.n_steps,
        "collisions": col,
    }
    return out, rep, col


def run_pair(cfg: dict, jacobian_check: bool = False) -> dict:
    """Warp one configuration and report metrics for both trajectories.

    Returns a dict holding the JSON-ready ``report`` plus the in-memory
    ``tiled``/``warped`` trajectories and continuity reports.
    """
    surface = cfgmod.surface_of(cfg)
    guide = cfgmod.guide_of(cfg, surface)
    prim = cfgmod.primitive_of(cfg)
    params = cfgmod.deform_of(cfg)
    tiled, warped, dmap = warp(prim, guide, surface, params, cfg.get("tile_tol"), return_map=True)
    L = prim.tool_length
    t_out, t_rep, t_col = _track_report(tiled.poses, L, surface, cfg)
    w_out, w_rep, w_col = _track_report(warped.poses, L, surface, cfg)
    report = {
        "surface": dict(cfg["surface"]),
        "n_poses": len(tiled),
        "n_tiles": int(tiled.tile_id[-1]) + 1,
        "tiled": t_out,
        "warped": w_out,
        "delta_p95_deg": w_out["p95_deg"] - t_out["p95_deg"],
        "stale_axis_samples": int(len(warped.stale_axis)),
    }
    if jacobian_check:
        spacing = float(np.min(np.linalg.norm(np.diff(tiled.positions, axis=0), axis=1)[
            tiled.tile_id[1:] == tiled.tile_id[:-1]]))
        report["deformation"] = deformation_checks(tiled, warped, dmap, spacing)
    return {
        "report": report,
        "tiled": tiled,
        "warped": warped,
        "tiled_rep": t_rep,
        "warped_rep": w_rep,
        "collisions": (t_col, w_col),
        "surface": surface,
        "map": dmap,
    }
