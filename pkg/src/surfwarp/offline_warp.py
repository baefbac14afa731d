"""Offline surface-constrained warping.

Pipeline: synthesize one period of a touch-lift-advance primitive, tile it
along a guide curve, lift it into tip/base dual tracks, deform the tracks
with a composition of small normal-driven maps, and complete full poses by
the minimum-change rotation about the new tool axis.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .errors import ConfigError, DomainError
from .geometry import (
    GuideCurve,
    Pose,
    Rotation,
    Surface,
    angle_between,
    clearance,
    rotation_between,
    surface_normal,
)

# Tool axis in the tool frame: points from base down to tip.
E_C = np.array([0.0, 0.0, -1.0])
# Fraction of the period left between the last waypoint and the next tile.
_PERIOD_EPS = 1e-6
_CONVERGED = 1e-7
_BLEND_REACH = 2.0  # base field support radius, in minimum sample spacings
_BLEND_TAU = 0.1


@dataclass(frozen=True)
class PrimitiveConfig:
    n_waypoints: int = 10
    lift_height: float = 0.03
    period_length: float = 0.2
    tool_length: float = 0.1

    def __post_init__(self):
        if int(self.n_waypoints) < 3:
            raise ConfigError("primitive needs n_waypoints >= 3")
        if not self.lift_height >= 0:
            raise ConfigError("lift_height must be >= 0")
        if not self.period_length > 0 or not self.tool_length > 0:
            raise ConfigError("period_length and tool_length must be > 0")


@dataclass(frozen=True)
class PeriodicPrimitive:
    offsets: np.ndarray  # (n, 3) tip offsets in the primitive frame
    contact: np.ndarray  # (n,) bool
    period_length: float
    tool_length: float

    def __post_init__(self):
        if len(self.offsets) < 3 or len(self.offsets) != len(self.contact):
            raise ConfigError("primitive needs >= 3 waypoints with matching contact flags")
        if not np.any(self.contact):
            raise ConfigError("primitive needs at least one contact waypoint")
        if not (self.period_length > 0 and self.tool_length > 0):
            raise ConfigError("period_length and tool_length must be > 0")


@dataclass
class TiledTrajectory:
    poses: list[Pose]
    contact_set: np.ndarray  # sorted indices
    free_set: np.ndarray
    tile_id: np.ndarray

    def __len__(self):
        return len(self.poses)

    @property
    def positions(self) -> np.ndarray:
        return np.array([p.position for p in self.poses])

    @property
    def contact_mask(self) -> np.ndarray:
        m = np.zeros(len(self.poses), dtype=bool)
        m[self.contact_set] = True
        return m


@dataclass
class DualTracks:
    tip: np.ndarray
    base: np.ndarray

    def __post_init__(self):
        self.tip = np.asarray(self.tip, dtype=float)
        self.base = np.asarray(self.base, dtype=float)
        if self.tip.shape != self.base.shape or self.tip.ndim != 2 or len(self.tip) < 2:
            raise DomainError("dual tracks need equal (K, 3) arrays with K >= 2")


@dataclass(frozen=True)
class DeformParams:
    iterations: int = 50
    step_cap: float = 0.2
    lambda_tip: float = 1.0
    lambda_base: float = 0.4
    target_clearance: float = 0.005
    smoothing_window: int = 5
    axis_eps: float = 1e-4

    def __post_init__(self):
        if not 0 < self.step_cap <= 0.5:
            raise ConfigError("step_cap must lie in (0, 0.5]")
        if not 0 <= self.lambda_base <= self.lambda_tip <= 1:
            raise ConfigError("need 0 <= lambda_base <= lambda_tip <= 1")
        if int(self.iterations) < 1:
            raise ConfigError("iterations must be >= 1")
        if int(self.smoothing_window) < 1 or int(self.smoothing_window) % 2 == 0:
            raise ConfigError("smoothing_window must be a positive odd count")
        if not self.axis_eps > 0:
            raise ConfigError("axis_eps must be > 0")


@dataclass
class WarpedTrajectory:
    poses: list[Pose]
    tip: np.ndarray
    base: np.ndarray
    contact_set: np.ndarray
    free_set: np.ndarray
    tile_id: np.ndarray
    stale_axis: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=int))

    def __len__(self):
        return len(self.poses)

    @property
    def contact_mask(self) -> np.ndarray:
        m = np.zeros(len(self.poses), dtype=bool)
        m[self.contact_set] = True
        return m


def extract_primitive(config: PrimitiveConfig) -> PeriodicPrimitive:
    """One period of the touch-lift-advance-touch cycle.

    Waypoints are evenly spaced in local x over the period (the last one just
    short of it); the two end waypoints touch, the interior ones are lifted.
    """
    n = int(config.n_waypoints)
    P = float(config.period_length)
    x = np.arange(n) * P / (n - 1)
    x[-1] = P * (1.0 - _PERIOD_EPS)
    z = np.full(n, float(config.lift_height))
    z[0] = z[-1] = 0.0
    offsets = np.stack([x, np.zeros(n), z], axis=1)
    return PeriodicPrimitive(offsets, z == 0.0, P, float(config.tool_length))


def _chord_frame(d: np.ndarray) -> np.ndarray:
    """Columns (x', y', z'): x' along the chord, z' the world up made orthogonal to it."""
    z = np.array([0.0, 0.0, 1.0]) - d[2] * d
    nz = np.linalg.norm(z)
    if nz < 1e-12:
        raise DomainError("chord direction is vertical; tile frame undefined")
    z = z / nz
    return np.column_stack([d, np.cross(z, d), z])


def tile_along_guide(primitive: PeriodicPrimitive, guide: GuideCurve, tol: float | None = None) -> TiledTrajectory:
    P = primitive.period_length
    S = guide.length
    if S < P:
        raise DomainError(f"guide length {S:.4g} is shorter than one period {P:.4g}")
    if tol is None:
        tol = 0.5 * guide.spacing
    n_tiles = int(np.floor(S / P + 1e-9))
    arc = guide.cumulative_arclength

    centers = []
    for i in range(n_tiles):
        s = (i + 0.5) * P
        j = int(np.argmin(np.abs(arc - s)))
        centers.append(guide.samples[j] if abs(arc[j] - s) <= tol else guide.point_at(s))
    centers = np.array(centers)

    if n_tiles > 1:
        chords = np.diff(centers, axis=0)
        chords = np.vstack([chords, chords[-1:]])
    else:
        chords = guide.point_at(P) - guide.point_at(0.0)
        chords = chords[None, :]
    chords = chords / np.linalg.norm(chords, axis=1, keepdims=True)

    poses, contact, tile_id = [], [], []
    offs = primitive.offsets
    for i in range(n_tiles):
        frame = _chord_frame(chords[i])
        rot = Rotation.from_matrix(frame)
        # Local x runs along the guide by arc length; y/z offsets use the chord frame.
        base_pts = guide.point_at(i * P + offs[:, 0])
        lateral = np.column_stack([np.zeros(len(offs)), offs[:, 1], offs[:, 2]]) @ frame.T
        for p in base_pts + lateral:
            poses.append(Pose(rot, p))
        contact.extend(primitive.contact.tolist())
        tile_id.extend([i] * len(offs))

    contact = np.array(contact, dtype=bool)
    return TiledTrajectory(
        poses=poses,
        contact_set=np.flatnonzero(contact),
        free_set=np.flatnonzero(~contact),
        tile_id=np.array(tile_id, dtype=int),
    )


def dual_tracks(tiled: TiledTrajectory, L: float, e_c=E_C) -> DualTracks:
    """Tip track from the tiled positions; base sits ``L`` back up the tool axis."""
    if not L > 0:
        raise DomainError("tool length must be > 0")
    e_c = np.asarray(e_c, dtype=float)
    tip = np.array([p.position for p in tiled.poses])
    base = np.array([p.position - L * p.rotation.apply(e_c) for p in tiled.poses])
    return DualTracks(tip, base)


def _bump(r):
    # C2 compact bump (1 - r^2)^3; |d/dr| <= 1.7173 on [0, 1].
    r = np.minimum(r, 1.0)
    return (1.0 - r * r) ** 3


@dataclass
class _Field:
    centers: np.ndarray
    disp: np.ndarray
    radius: np.ndarray
    _tree: cKDTree | None = None

    def __call__(self, pts: np.ndarray) -> np.ndarray:
        if self._tree is None:
            self._tree = cKDTree(self.centers)
        dist, idx = self._tree.query(pts)
        w = _bump(dist / self.radius[idx])
        return w[:, None] * self.disp[idx]


def _wendland(r):
    # Wendland C2 kernel; positive definite in 3-D, |d/dr| <= 2.11 on [0, 1].
    r = np.minimum(r, 1.0)
    return (1.0 - r) ** 4 * (4.0 * r + 1.0)


@dataclass
class _BlendField:
    """Smooth normalised blend ``sum psi_i d_i / (sum psi_i + tau)`` of nearby displacements.

    Neighbouring samples share the motion, so space around the track is
    carried along instead of being squeezed between per-sample bumps. The
    kernel is positive definite, so repeated blending cannot stall on a
    pattern of displacements that cancel out.
    """

    centers: np.ndarray
    disp: np.ndarray
    reach: float
    tau: float = _BLEND_TAU
    _tree: cKDTree | None = None

    def __call__(self, pts: np.ndarray) -> np.ndarray:
        if self._tree is None:
            self._tree = cKDTree(self.centers)
        pts = np.asarray(pts, dtype=float).reshape(-1, 3)
        dm = cKDTree(pts).sparse_distance_matrix(self._tree, self.reach, output_type="coo_matrix")
        w = _wendland(dm.data / self.reach)
        num = np.zeros((len(pts), 3))
        np.add.at(num, dm.row, w[:, None] * self.disp[dm.col])
        den = np.bincount(dm.row, weights=w, minlength=len(pts)) + self.tau
        # Exact zero distances are dropped by the sparse matrix; add them back.
        d0, i0 = self._tree.query(pts)
        hit = d0 == 0.0
        num[hit] += self.disp[i0[hit]]
        den[hit] += 1.0
        return num / den[:, None]


@dataclass
class DeformationMap:
    """The composed per-track maps ``p -> p + lambda * v_m(p)``, m = 1..M.

    Tip fields are sums of non-overlapping compact bumps centred on the tip
    samples, so they reproduce the per-sample displacement exactly and leave
    contact samples fixed. Base fields are smooth blends; the base track is
    moved by evaluating the field itself. Both keep ``I + lambda * grad v_m``
    invertible.
    """

    lambda_tip: float
    lambda_base: float
    tip_fields: list[_Field] = field(default_factory=list)
    base_fields: list[_Field] = field(default_factory=list)
    max_step: list[float] = field(default_factory=list)
    step_bound: list[float] = field(default_factory=list)

    @property
    def iterations(self) -> int:
        return len(self.tip_fields)

    def apply(self, pts, track: str = "tip") -> np.ndarray:
        p = np.array(pts, dtype=float).reshape(-1, 3)
        fields, lam = (
            (self.tip_fields, self.lambda_tip) if track == "tip" else (self.base_fields, self.lambda_base)
        )
        for f in fields:
            p = p + lam * f(p)
        return p

    def jacobian_dets(self, pts, step: float, track: str = "tip") -> np.ndarray:
        """Central-difference Jacobian determinant of the composed map at each point."""
        pts = np.asarray(pts, dtype=float).reshape(-1, 3)
        cols = []
        for i in range(3):
            e = np.zeros(3)
            e[i] = step
            cols.append((self.apply(pts + e, track) - self.apply(pts - e, track)) / (2 * step))
        J = np.stack(cols, axis=-1)
        return np.linalg.det(J)


def _min_tile_spacing(tip: np.ndarray, tile_id: np.ndarray) -> float:
    gaps = np.linalg.norm(np.diff(tip, axis=0), axis=1)
    same = tile_id[1:] == tile_id[:-1]
    gaps = gaps[same & (gaps > 0)]
    if len(gaps) == 0:
        gaps = np.linalg.norm(np.diff(tip, axis=0), axis=1)
        gaps = gaps[gaps > 0]
    if len(gaps) == 0:
        raise DomainError("tip track has no distinct consecutive samples")
    return float(gaps.min())


def _half_nn(points: np.ndarray) -> np.ndarray:
    if len(points) < 2:
        return np.full(len(points), np.inf)
    d, _ = cKDTree(points).query(points, k=2)
    return 0.5 * d[:, 1]


def _smooth_free(raw: np.ndarray, free: np.ndarray, tile_id: np.ndarray, w: int) -> np.ndarray:
    """Centred moving average over free samples of the same tile."""
    if w == 1:
        return np.where(free[:, None], raw, 0.0)
    h = w // 2
    out = np.zeros_like(raw)
    K = len(raw)
    for k in np.flatnonzero(free):
        lo, hi = max(0, k - h), min(K, k + h + 1)
        sel = np.arange(lo, hi)
        sel = sel[free[sel] & (tile_id[sel] == tile_id[k])]
        out[k] = raw[sel].mean(axis=0)
    return out


def _cap(v: np.ndarray, limit: np.ndarray) -> np.ndarray:
    n = np.linalg.norm(v, axis=1)
    scale = np.where(n > limit, limit / np.where(n > 0, n, 1.0), 1.0)
    return v * scale[:, None]


def deform_with_map(
    tracks: DualTracks,
    surface: Surface,
    contact_set,
    free_set,
    params: DeformParams = DeformParams(),
    tile_id=None,
) -> tuple[DualTracks, DeformationMap]:
    tip = tracks.tip.copy()
    base = tracks.base.copy()
    K = len(tip)
    free = np.zeros(K, dtype=bool)
    free[np.asarray(free_set, dtype=int)] = True
    if np.any(free[np.asarray(contact_set, dtype=int)]):
        raise DomainError("contact and free index sets overlap")
    tile_id = np.zeros(K, dtype=int) if tile_id is None else np.asarray(tile_id, dtype=int)
    eta, c_star, w = params.step_cap, params.target_clearance, int(params.smoothing_window)
    dmap = DeformationMap(params.lambda_tip, params.lambda_base)

    for _ in range(int(params.iterations)):
        bound = eta * _min_tile_spacing(tip, tile_id)

        # Tip field: lift free samples whose clearance is short of c*.
        deficit = np.where(free, np.maximum(0.0, c_star - clearance(surface, tip)), 0.0)
        raw_tip = deficit[:, None] * surface_normal(surface, tip[:, 0])
        rho_tip = _half_nn(tip)
        v_tip = _cap(_smooth_free(raw_tip, free, tile_id, w), np.minimum(bound, 0.5 * rho_tip))

        # Base field: follow the tip lift and turn the baseline onto the tip normal.
        axis = base - tip
        length = np.linalg.norm(axis, axis=1)
        ok = length > params.axis_eps
        target = tip + length[:, None] * surface_normal(surface, tip[:, 0])
        align = np.where(ok[:, None], target - base, 0.0)
        base_field = _BlendField(base.copy(), _cap(v_tip + align, bound), _BLEND_REACH * bound / eta)
        v_base = base_field(base)
        step = max(np.linalg.norm(v_tip, axis=1).max(), np.linalg.norm(v_base, axis=1).max())
        if step < _CONVERGED:
            break
        dmap.tip_fields.append(_Field(tip.copy(), v_tip, np.where(np.isfinite(rho_tip), rho_tip, 1.0)))
        dmap.base_fields.append(base_field)
        dmap.max_step.append(
            max(
                params.lambda_tip * np.linalg.norm(v_tip, axis=1).max(),
                params.lambda_base * np.linalg.norm(v_base, axis=1).max(),
            )
        )
        dmap.step_bound.append(bound)
        tip[free] = tip[free] + params.lambda_tip * v_tip[free]
        base = base + params.lambda_base * v_base

    # Contact tips are returned untouched, bit for bit.
    tip[~free] = tracks.tip[~free]
    return DualTracks(tip, base), dmap


def deform(
    tracks: DualTracks,
    surface: Surface,
    contact_set,
    free_set,
    params: DeformParams = DeformParams(),
    tile_id=None,
) -> DualTracks:
    return deform_with_map(tracks, surface, contact_set, free_set, params, tile_id)[0]


def complete_poses(warped: DualTracks, tiled: TiledTrajectory, axis_eps: float = 1e-4, e_c=E_C) -> WarpedTrajectory:
    """Minimum-change orientation completion about the warped tool axis."""
    if len(warped.tip) != len(tiled.poses):
        raise DomainError("track and tiled lengths differ")
    e_c = np.asarray(e_c, dtype=float)
    poses, stale = [], []
    u_prev = tiled.poses[0].rotation.apply(e_c)
    for k, tile_pose in enumerate(tiled.poses):
        d = warped.tip[k] - warped.base[k]
        n = np.linalg.norm(d)
        if n > axis_eps:
            u = d / n
            u_prev = u
        else:
            u = u_prev
            stale.append(k)
        a_tile = tile_pose.rotation.apply(e_c)
        if angle_between(a_tile, u) == 0.0:
            rot = tile_pose.rotation
        else:
            rot = rotation_between(a_tile, u) * tile_pose.rotation
        poses.append(Pose(rot, warped.tip[k]))
    return WarpedTrajectory(
        poses=poses,
        tip=warped.tip.copy(),
        base=warped.base.copy(),
        contact_set=tiled.contact_set.copy(),
        free_set=tiled.free_set.copy(),
        tile_id=tiled.tile_id.copy(),
        stale_axis=np.array(stale, dtype=int),
    )


def warp(
    nominal: PrimitiveConfig,
    guide: GuideCurve,
    surface: Surface,
    params: DeformParams = DeformParams(),
    tol: float | None = None,
    return_map: bool = False,
):
    """Tile, deform and complete; returns ``(tiled, warped)`` (plus the map if asked)."""
    primitive = extract_primitive(nominal)
    tiled = tile_along_guide(primitive, guide, tol)
    tracks = dual_tracks(tiled, primitive.tool_length)
    deformed, dmap = deform_with_map(tracks, surface, tiled.contact_set, tiled.free_set, params, tiled.tile_id)
    warped = complete_poses(deformed, tiled, params.axis_eps)
    if return_map:
        return tiled, warped, dmap
    return tiled, warped


TRAJECTORY_COLUMNS = ["k", "tile_id", "contact_flag", "px", "py", "pz", "qw", "qx", "qy", "qz"]


def export_trajectory(path, traj) -> None:
    """Write one trajectory as CSV with a header row."""
    contact = traj.contact_mask
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(TRAJECTORY_COLUMNS)
        for k, pose in enumerate(traj.poses):
            w.writerow(
                [k, int(traj.tile_id[k]), int(contact[k])]
                + [repr(float(v)) for v in pose.position]
                + [repr(float(v)) for v in pose.rotation.q]
            )


def read_trajectory(path) -> list[dict]:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    return rows
