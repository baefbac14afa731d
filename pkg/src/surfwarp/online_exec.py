"""Online contact-aware projection.

Each step turns the FSR reading into a bounded disturbance of the warp pose
(vertical shift plus a tilt about ``u x g``), then an always-on conic filter
pushes the tool axis back toward the warp axis by a bounded angle.

Sign convention: ``g_hat`` points up, so a low reading (e < 0) moves the tool
down onto the surface and a high reading moves it up.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .contact_sim import ContactEnv
from .errors import ConfigError, MeasurementError
from .geometry import Pose, angle_between, exp_rotation, perpendicular_axis

_PARALLEL = 1e-9


@dataclass(frozen=True)
class ExecParams:
    F_star: float = 0.5
    deadband: float = 0.05
    kappa_p: float = 0.05
    kappa_R: float = 0.2
    delta_max: float = 0.005
    delta_max_fsr: float = 0.15
    theta: float = 0.2
    delta_max_cone: float = 0.1
    g_hat: tuple = (0.0, 0.0, 1.0)
    e_c: tuple = (0.0, 0.0, -1.0)
    eps: float = 1e-9
    offset_limit: float = 0.05

    def __post_init__(self):
        for name in ("kappa_p", "kappa_R", "delta_max", "delta_max_fsr", "delta_max_cone", "offset_limit"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be > 0")
        if not 0 < self.theta < math.pi / 2:
            raise ConfigError("theta must lie in (0, pi/2)")
        if not self.deadband >= 0 or not 0 <= self.F_star <= 1:
            raise ConfigError("need deadband >= 0 and F_star in [0, 1]")
        for name in ("g_hat", "e_c"):
            v = np.asarray(getattr(self, name), dtype=float)
            if v.shape != (3,) or abs(np.linalg.norm(v) - 1.0) > 1e-9:
                raise ConfigError(f"{name} must be a unit 3-vector")
            object.__setattr__(self, name, tuple(float(c) for c in v))
        if not self.eps >= 0:
            raise ConfigError("eps must be >= 0")


@dataclass(frozen=True)
class StepResult:
    candidate: Pose
    projected: Pose
    contact_error: float
    phi: float
    delta_cone: float
    phi_after: float


def contact_error(F: float, params: ExecParams) -> float:
    if not 0.0 <= F <= 1.0:
        raise MeasurementError(f"FSR reading {F!r} outside [0, 1]")
    return F - params.F_star


def saturate(xi: float, bound: float) -> float:
    return min(bound, max(-bound, xi))


def _rotate_about(raw_axis: np.ndarray, norm_raw: float, angle: float, eps: float):
    # exp([angle * a]x) with a = raw / (|raw| + eps), which is not quite unit.
    a = raw_axis / (norm_raw + eps)
    na = np.linalg.norm(a)
    return exp_rotation(a / na, angle * na)


def fsr_candidate(warp: Pose, F: float, params: ExecParams) -> Pose:
    e = contact_error(F, params)
    if abs(e) <= params.deadband:
        return warp
    g = np.asarray(params.g_hat)
    shift = saturate(params.kappa_p * e, params.delta_max)
    position = warp.position + shift * g
    u = warp.rotation.apply(params.e_c)
    c = np.cross(u, g)
    nc = np.linalg.norm(c)
    if nc < _PARALLEL:
        return Pose(warp.rotation, position)
    tilt = saturate(params.kappa_R * e, params.delta_max_fsr)
    return Pose(_rotate_about(c, nc, -tilt, params.eps) * warp.rotation, position)


def conic_filter(candidate: Pose, warp: Pose, params: ExecParams) -> tuple[Pose, float]:
    u_can = candidate.rotation.apply(params.e_c)
    u_warp = warp.rotation.apply(params.e_c)
    phi = angle_between(u_can, u_warp)
    delta = min(params.delta_max_cone, max(0.0, phi - params.theta))
    if delta == 0.0:
        return candidate, 0.0
    c = np.cross(u_can, u_warp)
    nc = np.linalg.norm(c)
    if nc < _PARALLEL:
        # Antipodal axes: any perpendicular turns toward the warp axis.
        rot = exp_rotation(perpendicular_axis(u_can), delta)
    else:
        rot = _rotate_about(c, nc, delta, params.eps)
    return Pose(rot * candidate.rotation, candidate.position), delta


def execute_step(warp: Pose, F: float, params: ExecParams) -> StepResult:
    e = contact_error(F, params)
    cand = fsr_candidate(warp, F, params)
    proj, delta = conic_filter(cand, warp, params)
    u_warp = warp.rotation.apply(params.e_c)
    phi = angle_between(cand.rotation.apply(params.e_c), u_warp)
    phi_after = angle_between(proj.rotation.apply(params.e_c), u_warp)
    return StepResult(cand, proj, e, phi, delta, phi_after)


@dataclass
class ExecutionLog:
    steps: list[StepResult] = field(default_factory=list)
    forces: list[float] = field(default_factory=list)
    errors: list[float] = field(default_factory=list)
    active: list[bool] = field(default_factory=list)
    offsets: list[float] = field(default_factory=list)
    surface_offset: list[float] = field(default_factory=list)
    events: list[str] = field(default_factory=list)
    status: str = "ok"
    message: str = ""

    def __len__(self):
        return len(self.steps)


def execute_trajectory(warped, env: ContactEnv, params: ExecParams = ExecParams(), gate_free: bool = True) -> ExecutionLog:
    """Closed-loop run of ``warped`` against ``env``.

    The reading at step k is taken at the previously commanded tip (the warp
    tip at k = 0). The vertical shifts of active steps accumulate into a
    persistent offset (clamped to ``offset_limit``) so the tool can follow a
    surface that moved by more than ``delta_max``. With ``gate_free`` the FSR
    stage only acts when both the measured and the current sample are
    contact-critical; other steps run the conic filter alone.
    """
    log = ExecutionLog()
    g = np.asarray(params.g_hat)
    contact = warped.contact_mask
    offset = 0.0
    measured_at = warped.poses[0].position if len(warped.poses) else None
    try:
        for k, wp in enumerate(warped.poses):
            ref = Pose(wp.rotation, wp.position + offset * g)
            F = env.measure(measured_at)
            e = contact_error(F, params)
            active = (not gate_free) or (contact[k] and (k == 0 or contact[k - 1]))
            res = execute_step(ref, F if active else params.F_star, params)
            if active:
                shift = float(np.dot(res.candidate.position - ref.position, g))
                offset = saturate(offset + shift, params.offset_limit)
            log.steps.append(res)
            log.forces.append(F)
            log.errors.append(e)
            log.active.append(bool(active))
            log.offsets.append(offset)
            log.surface_offset.append(env.surface.height_offset)
            log.events.append(env.event_at(env.current_step))
            measured_at = res.projected.position
            env.advance()
    except Exception as exc:  # env or measurement fault: keep what ran
        log.status = "aborted"
        log.message = f"{type(exc).__name__}: {exc}"
    return log


def recovery_steps(log: ExecutionLog, drop_step: int, deadband: float) -> int | None:
    """Steps after ``drop_step`` until an active reading is back inside the deadband."""
    for k in range(drop_step, len(log)):
        if log.active[k] and abs(log.errors[k]) <= deadband:
            return k - drop_step
    return None


def execution_summary(log: ExecutionLog, params: ExecParams, drop_step: int | None = None) -> dict:
    n = len(log)
    dev = [s.phi_after for s in log.steps]
    in_band = sum(abs(e) <= params.deadband for e in log.errors)
    out = {
        "status": log.status,
        "n_steps": n,
        "max_deviation_rad": max(dev) if dev else 0.0,
        "max_deviation_deg": math.degrees(max(dev)) if dev else 0.0,
        "theta_rad": params.theta,
        "deadband_fraction": in_band / n if n else 0.0,
        "max_abs_offset": max((abs(o) for o in log.offsets), default=0.0),
        "final_offset": log.offsets[-1] if log.offsets else 0.0,
    }
    if drop_step is not None:
        out["drop_step"] = drop_step
        out["recovery_steps"] = recovery_steps(log, drop_step, params.deadband)
    if log.message:
        out["message"] = log.message
    return out


EXECUTION_COLUMNS = [
    "k", "F", "e", "phi_deg", "delta_cone_deg", "px", "py", "pz", "qw", "qx", "qy", "qz", "event_flag",
]


def export_execution(path, log: ExecutionLog) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(EXECUTION_COLUMNS)
        for k, s in enumerate(log.steps):
            flag = log.events[k] or ("active" if log.active[k] else "passive")
            w.writerow(
                [k, repr(float(log.forces[k])), repr(float(log.errors[k])),
                 repr(math.degrees(s.phi)), repr(math.degrees(s.delta_cone))]
                + [repr(float(v)) for v in s.projected.position]
                + [repr(float(v)) for v in s.projected.rotation.q]
                + [flag]
            )
