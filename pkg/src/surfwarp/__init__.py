"""Surface-aware warping of periodic tool trajectories with online contact correction."""

from .errors import ConfigError, DomainError, MeasurementError
from .geometry import GuideCurve, Pose, Rotation, Surface, build_guide
from .offline_warp import DeformParams, PrimitiveConfig, extract_primitive, tile_along_guide, warp
from .online_exec import ExecParams, execute_trajectory
from .contact_sim import ContactEnv
from .metrics import continuity, collision_count

__all__ = [
    "ConfigError", "DomainError", "MeasurementError",
    "GuideCurve", "Pose", "Rotation", "Surface", "build_guide",
    "DeformParams", "PrimitiveConfig", "extract_primitive", "tile_along_guide", "warp",
    "ExecParams", "execute_trajectory", "ContactEnv",
    "continuity", "collision_count",
]
