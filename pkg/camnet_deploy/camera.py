"""Pinhole camera intrinsics, frustum quantities and per-point predicates.

World geometry is in meters and intrinsics are in millimeters and pixels.
`Camera.to_local_mm` is the single place where meters become millimeters.
"""

import logging
import math
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .errors import DomainError
from .geometry import Pose6, rotation_matrix

logger = logging.getLogger(__name__)

METERS_TO_MM = 1000.0
FOV_OVERRIDE_TOLERANCE = 1e-6


@dataclass(frozen=True)
class CameraIntrinsics:
    """Lens and sensor parameters (mm, mm/pixel, pixel)."""

    f: float
    s_u: float
    s_v: float
    o_u: float
    o_v: float
    w: float
    h: float
    d_a: float
    d_s: float

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "CameraIntrinsics":
        principal = data.get("o")
        o_u, o_v = (principal if principal is not None else (data.get("o_u"), data.get("o_v")))
        return cls(
            f=float(data["f"]),
            s_u=float(data["s_u"]),
            s_v=float(data["s_v"]),
            o_u=float(o_u),
            o_v=float(o_v),
            w=float(data["w"]),
            h=float(data["h"]),
            d_a=float(data["d_a"]),
            d_s=float(data["d_s"]),
        )

    def to_dict(self) -> Dict[str, float]:
        return asdict(self)

    def validate(self) -> Tuple[bool, List[str]]:
        errors = []
        for name, value in asdict(self).items():
            if not (math.isfinite(value) and value > 0):
                errors.append(f"camera.intrinsics.{name} must be a positive number, got {value!r}")
        if self.d_s <= self.f:
            errors.append(f"camera.intrinsics.d_s ({self.d_s}) must exceed f ({self.f})")
        if not 0 < self.o_u < self.w:
            errors.append(f"camera.intrinsics.o_u ({self.o_u}) must lie inside (0, w={self.w})")
        if not 0 < self.o_v < self.h:
            errors.append(f"camera.intrinsics.o_v ({self.o_v}) must lie inside (0, h={self.h})")
        return len(errors) == 0, errors

    def ensure_valid(self) -> "CameraIntrinsics":
        ok, errors = self.validate()
        if not ok:
            raise DomainError("; ".join(errors))
        return self

    @property
    def max_pixel_size(self) -> float:
        return max(self.s_u, self.s_v)

    @property
    def min_pixel_size(self) -> float:
        return min(self.s_u, self.s_v)


@dataclass(frozen=True)
class Frustum:
    phi_l: float
    phi_r: float
    phi_t: float
    phi_b: float
    d_n: float
    d_f: float
    delta: float
    tan_l: float = field(init=False, repr=False)
    tan_r: float = field(init=False, repr=False)
    tan_t: float = field(init=False, repr=False)
    tan_b: float = field(init=False, repr=False)

    def __post_init__(self):
        for name in ("l", "r", "t", "b"):
            object.__setattr__(self, f"tan_{name}", math.tan(getattr(self, f"phi_{name}")))

    @property
    def angles(self) -> Tuple[float, float, float, float]:
        return (self.phi_l, self.phi_r, self.phi_t, self.phi_b)


def derive_fov_angles(intr: CameraIntrinsics) -> Tuple[float, float, float, float]:
    """Half-angles (left, right, top, bottom) from principal point and sensor extent."""
    return (
        math.atan(intr.o_u * intr.s_u / intr.f),
        math.atan((intr.w - intr.o_u) * intr.s_u / intr.f),
        math.atan(intr.o_v * intr.s_v / intr.f),
        math.atan((intr.h - intr.o_v) * intr.s_v / intr.f),
    )


def depth_of_field(intr: CameraIntrinsics, delta: float) -> Tuple[float, float]:
    """Near and far limits (mm) of acceptable focus for a circle of confusion delta (pixel).

    A non-positive far-field denominator is the hyperfocal case and yields +inf.
    """
    if not delta > 0:
        raise DomainError(f"Circle of confusion must be positive, got {delta!r}")
    numerator = intr.d_a * intr.d_s * intr.f
    blur = delta * intr.min_pixel_size * (intr.d_s - intr.f)
    d_n = numerator / (intr.d_a * intr.f + blur)
    far_denominator = intr.d_a * intr.f - blur
    d_f = numerator / far_denominator if far_denominator > 0 else math.inf
    return d_n, d_f


def build_frustum(
    intr: CameraIntrinsics,
    delta: float,
    fov_override: Optional[Sequence[float]] = None,
) -> Frustum:
    """Frustum from intrinsics, with an optional FOV override."""
    angles = derive_fov_angles(intr)
    if fov_override is not None:
        override = tuple(float(a) for a in fov_override)
        if len(override) != 4:
            raise DomainError("fov_override needs four angles (left, right, top, bottom)")
        if any(not 0 <= a < math.pi / 2 for a in override):
            raise DomainError(f"fov_override angles must lie in [0, π/2), got {override}")
        drift = max(abs(a - b) for a, b in zip(angles, override))
        if drift > FOV_OVERRIDE_TOLERANCE:
            logger.warning(
                f"FOV override differs from the intrinsics-derived angles by {drift:.3e} rad; using the override"
            )
        angles = override
    d_n, d_f = depth_of_field(intr, delta)
    return Frustum(*angles, d_n=d_n, d_f=d_f, delta=float(delta))


def in_fov(point_local, frustum: Frustum) -> bool:
    """Inclusive frustum test; points with z ≤ 0 are outside."""
    x, y, z = (float(c) for c in point_local)
    if z <= 0:
        return False
    return (-frustum.tan_l <= x / z <= frustum.tan_r) and (-frustum.tan_t <= y / z <= frustum.tan_b)


def in_fov_batch(points_local: np.ndarray, frustum: Frustum) -> np.ndarray:
    """Row mask of camera-frame points inside the frustum."""
    points_local = np.asarray(points_local, dtype=float).reshape(-1, 3)
    z = points_local[:, 2]
    ahead = z > 0
    safe_z = np.where(ahead, z, 1.0)
    xr = points_local[:, 0] / safe_z
    yr = points_local[:, 1] / safe_z
    return (
        ahead
        & (xr >= -frustum.tan_l)
        & (xr <= frustum.tan_r)
        & (yr >= -frustum.tan_t)
        & (yr <= frustum.tan_b)
    )


def is_focused(z_local: float, frustum: Frustum) -> bool:
    """Depth inside the depth of field [d_n, d_f]."""
    return frustum.d_n <= z_local <= frustum.d_f


def resolution_criterion(z_local: float, intr: CameraIntrinsics) -> float:
    """Pixels per millimeter at depth z_local (mm)."""
    if not z_local > 0:
        raise DomainError(f"Resolution needs a point in front of the camera, got z={z_local!r}")
    return intr.f * intr.d_s / ((intr.d_s - intr.f) * z_local * intr.max_pixel_size)


def resolution_batch(z_local: np.ndarray, intr: CameraIntrinsics) -> np.ndarray:
    """Resolution criterion for an array of depths (mm)."""
    z_local = np.asarray(z_local, dtype=float)
    return intr.f * intr.d_s / ((intr.d_s - intr.f) * z_local * intr.max_pixel_size)


@dataclass(frozen=True)
class Camera:
    intrinsics: CameraIntrinsics
    pose: Pose6
    frustum: Frustum
    id: int = 1
    rotation: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        rotation = rotation_matrix(self.pose.orientation)
        rotation.setflags(write=False)
        object.__setattr__(self, "rotation", rotation)

    @classmethod
    def from_pose(
        cls,
        intrinsics: CameraIntrinsics,
        pose: Pose6,
        delta: float,
        camera_id: int = 1,
        fov_override: Optional[Sequence[float]] = None,
    ) -> "Camera":
        intrinsics.ensure_valid()
        return cls(intrinsics, pose, build_frustum(intrinsics, delta, fov_override), camera_id)

    @property
    def position(self) -> np.ndarray:
        return self.pose.position_array

    def to_local_mm(self, points_world) -> np.ndarray:
        """World points (m), shape (3,) or (n, 3), to camera-frame coordinates (mm)."""
        points = np.asarray(points_world, dtype=float)
        local = (points - self.position) @ self.rotation.T
        return local * METERS_TO_MM

    def optical_axis(self) -> np.ndarray:
        """Unit local Z axis expressed in the world frame."""
        return self.rotation[2].copy()
