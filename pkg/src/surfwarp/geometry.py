"""Rotation/pose algebra, analytic height-field surfaces and guide curves.

Rotations are unit quaternions stored as ``(w, x, y, z)``. Surfaces are 1-D
height fields ``z = f(x)`` extruded along y, so every normal lies in the
xz-plane.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import DomainError

_UNIT_TOL = 1e-9


class Family(str, Enum):
    SIN = "sin"
    COS = "cos"
    EXP = "exp"
    PARABOLIC = "parabolic"
    CUBIC = "cubic"


def _as_vec3(v, name="vector") -> np.ndarray:
    arr = np.asarray(v, dtype=float)
    if arr.shape != (3,):
        raise DomainError(f"{name} must have shape (3,), got {arr.shape}")
    return arr


def _quat_mul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    aw, ax, ay, az = a
    bw, bx, by, bz = b
    return np.array(
        [
            aw * bw - ax * bx - ay * by - az * bz,
            aw * bx + ax * bw + ay * bz - az * by,
            aw * by - ax * bz + ay * bw + az * bx,
            aw * bz + ax * by - ay * bx + az * bw,
        ]
    )


@dataclass(frozen=True)
class Rotation:
    """Unit quaternion ``(w, x, y, z)``; ``q`` and ``-q`` are the same rotation."""

    q: np.ndarray

    def __post_init__(self):
        q = np.array(self.q, dtype=float).reshape(4)
        n = np.linalg.norm(q)
        if not np.isfinite(n) or n < 1e-12:
            raise DomainError("quaternion must be finite and non-zero")
        if n != 1.0:
            q = q / n
        q.flags.writeable = False
        object.__setattr__(self, "q", q)

    @classmethod
    def identity(cls) -> Rotation:
        return cls(np.array([1.0, 0.0, 0.0, 0.0]))

    @classmethod
    def from_matrix(cls, m) -> Rotation:
        m = np.asarray(m, dtype=float)
        # Shepperd's method: branch on the largest diagonal term.
        tr = np.trace(m)
        if tr > 0:
            s = 2.0 * np.sqrt(tr + 1.0)
            q = [0.25 * s, (m[2, 1] - m[1, 2]) / s, (m[0, 2] - m[2, 0]) / s, (m[1, 0] - m[0, 1]) / s]
        elif m[0, 0] > m[1, 1] and m[0, 0] > m[2, 2]:
            s = 2.0 * np.sqrt(1.0 + m[0, 0] - m[1, 1] - m[2, 2])
            q = [(m[2, 1] - m[1, 2]) / s, 0.25 * s, (m[0, 1] + m[1, 0]) / s, (m[0, 2] + m[2, 0]) / s]
        elif m[1, 1] > m[2, 2]:
            s = 2.0 * np.sqrt(1.0 + m[1, 1] - m[0, 0] - m[2, 2])
            q = [(m[0, 2] - m[2, 0]) / s, (m[0, 1] + m[1, 0]) / s, 0.25 * s, (m[1, 2] + m[2, 1]) / s]
        else:
            s = 2.0 * np.sqrt(1.0 + m[2, 2] - m[0, 0] - m[1, 1])
            q = [(m[1, 0] - m[0, 1]) / s, (m[0, 2] + m[2, 0]) / s, (m[1, 2] + m[2, 1]) / s, 0.25 * s]
        return cls(np.array(q))

    def matrix(self) -> np.ndarray:
        w, x, y, z = self.q
        return np.array(
            [
                [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
                [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
                [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
            ]
        )

    def apply(self, v) -> np.ndarray:
        return self.matrix() @ np.asarray(v, dtype=float)

    def inverse(self) -> Rotation:
        w, x, y, z = self.q
        return Rotation(np.array([w, -x, -y, -z]))

    def __mul__(self, other: Rotation) -> Rotation:
        if not isinstance(other, Rotation):
            return NotImplemented
        return Rotation(_quat_mul(self.q, other.q))

    def __eq__(self, other):
        if not isinstance(other, Rotation):
            return NotImplemented
        return bool(np.array_equal(self.q, other.q))

    def __hash__(self):
        return hash(self.q.tobytes())


@dataclass(frozen=True)
class Pose:
    rotation: Rotation
    position: np.ndarray

    def __post_init__(self):
        p = np.array(self.position, dtype=float).reshape(3)
        if not np.all(np.isfinite(p)):
            raise DomainError("pose position must be finite")
        p.flags.writeable = False
        object.__setattr__(self, "position", p)

    def __eq__(self, other):
        if not isinstance(other, Pose):
            return NotImplemented
        return self.rotation == other.rotation and bool(np.array_equal(self.position, other.position))

    def __hash__(self):
        return hash((self.rotation, self.position.tobytes()))


def geodesic_angle(r1: Rotation, r2: Rotation) -> float:
    """Sign-invariant rotation distance in [0, pi]."""
    # Equal to 2*arccos(|q1 . q2|); the atan2 form keeps precision near 0.
    rel = _quat_mul(r1.inverse().q, r2.q)
    return 2.0 * float(np.arctan2(np.linalg.norm(rel[1:]), abs(rel[0])))


def angle_between(u, v) -> float:
    u = _as_vec3(u, "u")
    v = _as_vec3(v, "v")
    nu, nv = np.linalg.norm(u), np.linalg.norm(v)
    if nu <= 1e-12 or nv <= 1e-12:
        raise DomainError("angle_between needs non-zero vectors")
    # arccos of the clamped cosine, evaluated as atan2 for small-angle accuracy.
    return float(np.arctan2(np.linalg.norm(np.cross(u, v)) / (nu * nv), np.dot(u, v) / (nu * nv)))


def exp_rotation(axis, angle: float) -> Rotation:
    a = _as_vec3(axis, "axis")
    half = 0.5 * float(angle)
    return Rotation(np.concatenate(([np.cos(half)], np.sin(half) * a)))


def perpendicular_axis(u) -> np.ndarray:
    """Deterministic unit vector perpendicular to ``u``.

    Picks the basis vector whose cross product with ``u`` has the largest norm.
    """
    u = _as_vec3(u)
    crosses = [np.cross(e, u) for e in np.eye(3)]
    best = max(crosses, key=lambda c: float(np.linalg.norm(c)))
    return best / np.linalg.norm(best)


def rotation_between(u, v) -> Rotation:
    """Minimal rotation taking unit vector ``u`` onto unit vector ``v``."""
    u = _as_vec3(u, "u")
    v = _as_vec3(v, "v")
    u = u / np.linalg.norm(u)
    v = v / np.linalg.norm(v)
    ang = angle_between(u, v)
    if ang == 0.0:
        return Rotation.identity()
    if ang > np.pi - 1e-6:
        return exp_rotation(perpendicular_axis(u), np.pi)
    axis = np.cross(u, v)
    return exp_rotation(axis / np.linalg.norm(axis), ang)


@dataclass(frozen=True)
class Surface:
    family: Family
    amplitude: float = 0.0
    frequency: float = 1.0
    scale: float = 1.0
    height_offset: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "family", Family(self.family))
        for name in ("amplitude", "frequency", "scale", "height_offset"):
            if not np.isfinite(getattr(self, name)):
                raise DomainError(f"surface {name} must be finite")

    def shifted(self, dz: float) -> Surface:
        return Surface(self.family, self.amplitude, self.frequency, self.scale, self.height_offset + dz)


def _check_finite(x):
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise DomainError("x must be finite")
    return x


def surface_height(surface: Surface, x):
    x = _check_finite(x)
    A, h0 = surface.amplitude, surface.height_offset
    fam = surface.family
    if fam is Family.SIN:
        z = A * np.sin(surface.frequency * x)
    elif fam is Family.COS:
        z = A * np.cos(surface.frequency * x)
    elif fam is Family.EXP:
        z = A * np.exp(-surface.scale * x * x)
    elif fam is Family.PARABOLIC:
        z = A * x * x
    else:
        z = A * x * x * x
    z = h0 + z
    return float(z) if z.ndim == 0 else z


def surface_slope(surface: Surface, x):
    """Analytic derivative f'(x)."""
    x = _check_finite(x)
    A, w, k = surface.amplitude, surface.frequency, surface.scale
    fam = surface.family
    if fam is Family.SIN:
        d = A * w * np.cos(w * x)
    elif fam is Family.COS:
        d = -A * w * np.sin(w * x)
    elif fam is Family.EXP:
        d = -2.0 * A * k * x * np.exp(-k * x * x)
    elif fam is Family.PARABOLIC:
        d = 2.0 * A * x
    else:
        d = 3.0 * A * x * x
    return float(d) if np.ndim(d) == 0 else d


def surface_normal(surface: Surface, x) -> np.ndarray:
    """Upward unit normal ``normalize((-f'(x), 0, 1))``; shape (3,) or (n, 3)."""
    d = np.asarray(surface_slope(surface, x), dtype=float)
    n = np.stack([-d, np.zeros_like(d), np.ones_like(d)], axis=-1)
    return n / np.linalg.norm(n, axis=-1, keepdims=True)


def clearance(surface: Surface, points) -> np.ndarray:
    """Vertical gap ``z - f(x)`` for one point or an (n, 3) array."""
    p = np.asarray(points, dtype=float)
    return p[..., 2] - surface_height(surface, p[..., 0])


@dataclass(frozen=True)
class GuideCurve:
    samples: np.ndarray
    cumulative_arclength: np.ndarray
    surface: Surface | None = field(default=None, compare=False)

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=float)
        c = np.asarray(self.cumulative_arclength, dtype=float)
        if s.ndim != 2 or s.shape[1] != 3 or len(s) < 2 or len(c) != len(s):
            raise DomainError("guide needs >= 2 samples of shape (n, 3) and matching arc lengths")
        if c[0] != 0.0 or np.any(np.diff(c) <= 0):
            raise DomainError("cumulative arc length must start at 0 and strictly increase")
        if self.surface is not None:
            err = np.max(np.abs(s[:, 2] - surface_height(self.surface, s[:, 0])))
            if err > _UNIT_TOL:
                raise DomainError(f"guide samples leave the surface by {err:.3g}")
        s.flags.writeable = False
        c.flags.writeable = False
        object.__setattr__(self, "samples", s)
        object.__setattr__(self, "cumulative_arclength", c)

    @property
    def length(self) -> float:
        return float(self.cumulative_arclength[-1])

    @property
    def spacing(self) -> float:
        return float(np.min(np.diff(self.cumulative_arclength)))

    def point_at(self, s):
        """Linear interpolation of the samples at arc length(s) ``s``."""
        s = np.asarray(s, dtype=float)
        c = self.cumulative_arclength
        out = np.stack([np.interp(s, c, self.samples[:, i]) for i in range(3)], axis=-1)
        return out


def build_guide(surface: Surface, x_start: float, x_end: float, n: int) -> GuideCurve:
    if not (np.isfinite(x_start) and np.isfinite(x_end)) or x_end <= x_start:
        raise DomainError("guide needs finite x_end > x_start")
    if int(n) < 2:
        raise DomainError("guide needs n >= 2 samples")
    x = np.linspace(x_start, x_end, int(n))
    pts = np.stack([x, np.zeros_like(x), surface_height(surface, x)], axis=1)
    seg = np.linalg.norm(np.diff(pts, axis=0), axis=1)
    return GuideCurve(pts, np.concatenate(([0.0], np.cumsum(seg))), surface)
