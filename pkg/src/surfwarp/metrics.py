"""Continuity and feasibility metrics for paired tiled/warped trajectories."""

from __future__ import annotations

import csv
import math
from dataclasses import asdict, dataclass

import numpy as np

from .errors import DomainError
from .geometry import Pose, Surface, geodesic_angle, surface_height

BAD_STEP_DEG = 10.0
E_C = np.array([0.0, 0.0, -1.0])


@dataclass
class ContinuityReport:
    d_theta: np.ndarray
    p95: float
    bad_rate: float
    n_steps: int


@dataclass
class PairSummary:
    surface_family: str
    n_pairs: int
    n_steps: int
    median_delta_p95: float
    bad_rate_tiled: float
    bad_rate_warped: float
    delta_bad: float
    collisions_tiled: int
    collisions_warped: int


SUMMARY_COLUMNS = list(PairSummary.__dataclass_fields__)


def angular_steps(poses: list[Pose]) -> np.ndarray:
    if len(poses) < 2:
        raise DomainError("need at least two poses")
    return np.array([geodesic_angle(a.rotation, b.rotation) for a, b in zip(poses[:-1], poses[1:])])


def percentile_95(values) -> float:
    """Nearest-rank 95th percentile (no interpolation)."""
    v = np.sort(np.asarray(values, dtype=float))
    if v.size == 0:
        raise DomainError("percentile of an empty sequence")
    return float(v[math.ceil(0.95 * v.size) - 1])


def bad_step_rate(values, threshold: float = math.radians(BAD_STEP_DEG)) -> float:
    v = np.asarray(values, dtype=float)
    if v.size == 0:
        raise DomainError("bad-step rate of an empty sequence")
    return int(np.count_nonzero(v > threshold)) / v.size


def continuity(poses: list[Pose], threshold: float = math.radians(BAD_STEP_DEG)) -> ContinuityReport:
    d = angular_steps(poses)
    return ContinuityReport(d, percentile_95(d), bad_step_rate(d, threshold), len(d))


def axis_depths(poses: list[Pose], L: float, surface: Surface, samples_per_axis: int = 32, e_c=E_C) -> np.ndarray:
    """Largest depth below the surface along each tool segment, tip excluded.

    Samples sit at t = i / (n - 1), i = 1..n-1, from tip (t=0) to base (t=1).
    """
    if samples_per_axis < 2:
        raise DomainError("samples_per_axis must be >= 2")
    t = np.arange(1, samples_per_axis) / (samples_per_axis - 1)
    e_c = np.asarray(e_c, dtype=float)
    tips = np.array([p.position for p in poses])
    ups = np.array([-p.rotation.apply(e_c) for p in poses])
    pts = tips[:, None, :] + L * t[None, :, None] * ups[:, None, :]
    depth = surface_height(surface, pts[..., 0]) - pts[..., 2]
    return depth.max(axis=1)


def collision_count(
    poses: list[Pose],
    L: float,
    surface: Surface,
    clearance_tol: float = 1e-3,
    samples_per_axis: int = 32,
    e_c=E_C,
) -> int:
    depth = axis_depths(poses, L, surface, samples_per_axis, e_c)
    return int(np.count_nonzero(depth > clearance_tol))


def summarize_pairs(pairs, family: str) -> PairSummary:
    """Aggregate ``(tiled_report, warped_report, collisions_tiled, collisions_warped)`` tuples.

    Bad rates are pooled over steps (step-weighted), not averaged per trajectory.
    """
    pairs = list(pairs)
    if not pairs:
        raise DomainError("no pairs to summarize")
    deltas = [math.degrees(w.p95 - t.p95) for t, w, _, _ in pairs]
    steps_t = sum(t.n_steps for t, _, _, _ in pairs)
    steps_w = sum(w.n_steps for _, w, _, _ in pairs)
    bad_t = sum(round(t.bad_rate * t.n_steps) for t, _, _, _ in pairs) / steps_t
    bad_w = sum(round(w.bad_rate * w.n_steps) for _, w, _, _ in pairs) / steps_w
    return PairSummary(
        surface_family=str(family),
        n_pairs=len(pairs),
        n_steps=steps_t,
        median_delta_p95=float(np.median(deltas)),
        bad_rate_tiled=bad_t,
        bad_rate_warped=bad_w,
        delta_bad=bad_t - bad_w,
        collisions_tiled=int(sum(c for _, _, c, _ in pairs)),
        collisions_warped=int(sum(c for _, _, _, c in pairs)),
    )


def _fmt(v):
    if isinstance(v, float):
        return f"{v:.6f}"
    return str(v)


def export_summary(path, rows: list[PairSummary], extra: list[dict] | None = None) -> None:
    """One row per family in the Table-1 column order; ``extra`` adds trailing columns."""
    extra_cols = list(extra[0]) if extra else []
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(SUMMARY_COLUMNS + extra_cols)
        for i, row in enumerate(rows):
            d = asdict(row)
            cells = [_fmt(d[c]) for c in SUMMARY_COLUMNS]
            if extra:
                cells += [_fmt(extra[i][c]) for c in extra_cols]
            w.writerow(cells)
