"""Recognition predicate, the recognized-area objective and network-level metrics."""

import logging
import math
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .camera import Camera, CameraIntrinsics, build_frustum
from .coverage import CoverageField, Scene, coverage_field
from .errors import DomainError
from .fusion import FieldFusion, FusionMethod, fused_strength_field
from .geometry import Mesh, Pose6

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class EvaluationSettings:
    """Everything besides poses and scene that an evaluation depends on."""

    intrinsics: CameraIntrinsics
    delta: float
    thold: float = 1.0
    fusion_method: FusionMethod = FusionMethod.FULL
    fov_override: Optional[Tuple[float, float, float, float]] = None

    def __post_init__(self):
        object.__setattr__(self, "fusion_method", FusionMethod.parse(self.fusion_method))
        if not self.thold > 0:
            raise DomainError(f"Recognition threshold must be positive, got {self.thold!r}")
        self.intrinsics.ensure_valid()

    def build_cameras(self, poses: Sequence[Pose6]) -> List[Camera]:
        frustum = build_frustum(self.intrinsics, self.delta, self.fov_override)
        return [Camera(self.intrinsics, pose, frustum, index + 1) for index, pose in enumerate(poses)]


def recognized(strength: float, thold: float) -> int:
    """1 when the fused strength reaches the threshold."""
    if not thold > 0:
        raise DomainError(f"Recognition threshold must be positive, got {thold!r}")
    return 1 if strength >= thold else 0


def recognized_area(strengths, areas, thold: float) -> float:
    """Total area of pieces whose strength reaches the threshold."""
    if not thold > 0:
        raise DomainError(f"Recognition threshold must be positive, got {thold!r}")
    strengths = np.asarray(strengths, dtype=float)
    areas = np.asarray(areas, dtype=float)
    return math.fsum(areas[strengths >= thold])


def fuse_mesh(
    cameras: Sequence[Camera], mesh: Mesh, scene: Scene, thold: float, fusion_method=FusionMethod.FULL
) -> Tuple[CoverageField, FieldFusion]:
    """Coverage field and fused strengths of every piece."""
    field_ = coverage_field(cameras, scene, mesh)
    return field_, fused_strength_field(field_, fusion_method, thold, mesh.areas())


def objective(
    cameras: Sequence[Camera], mesh: Mesh, scene: Scene, thold: float, fusion_method=FusionMethod.FULL
) -> float:
    """Total area (m²) of recognized pieces."""
    if len(mesh) == 0:
        raise DomainError("Objective needs a non-empty mesh")
    _, fusion = fuse_mesh(cameras, mesh, scene, thold, fusion_method)
    return recognized_area(fusion.strengths, mesh.areas(), thold)


@dataclass(frozen=True, eq=False)
class CoverageReport:
    strengths: np.ndarray
    recognized: np.ndarray
    principal: np.ndarray
    recognized_ratio: float
    recognized_area: float
    average_coverage_strength: float
    average_coverage_strength_recognized: float
    average_resolution: float
    piece_count: int
    total_area: float
    fusion_method: FusionMethod
    thold: float
    camera_count: int = 0

    def summary(self) -> Dict[str, Any]:
        return {
            "camera_count": self.camera_count,
            "piece_count": self.piece_count,
            "total_area": self.total_area,
            "fusion_method": self.fusion_method.value,
            "thold": self.thold,
            "recognized_count": int(self.recognized.sum()),
            "recognized_ratio": self.recognized_ratio,
            "recognized_area": self.recognized_area,
            "average_coverage_strength": self.average_coverage_strength,
            "average_coverage_strength_recognized": self.average_coverage_strength_recognized,
            "average_resolution": self.average_resolution,
        }


def build_report(
    strengths: np.ndarray,
    principals: np.ndarray,
    resolution: np.ndarray,
    mesh: Mesh,
    thold: float,
    method: FusionMethod,
) -> CoverageReport:
    """Report metrics from precomputed strengths, principals and resolutions."""
    strengths = np.asarray(strengths, dtype=float)
    flags = strengths >= thold
    count = len(mesh)
    if resolution.size:
        principal_resolution = np.where(
            principals >= 0, resolution[np.maximum(principals, 0), np.arange(count)], 0.0
        )
    else:
        principal_resolution = np.zeros(count)
    return CoverageReport(
        strengths=strengths,
        recognized=flags,
        principal=np.asarray(principals, dtype=int),
        recognized_ratio=float(flags.sum()) / count if count else 0.0,
        recognized_area=recognized_area(strengths, mesh.areas(), thold),
        average_coverage_strength=float(strengths.mean()) if count else 0.0,
        average_coverage_strength_recognized=float(strengths[flags].mean()) if flags.any() else 0.0,
        average_resolution=float(principal_resolution.mean()) if count else 0.0,
        piece_count=count,
        total_area=mesh.total_area,
        fusion_method=FusionMethod.parse(method),
        thold=thold,
        camera_count=resolution.shape[0] if resolution.ndim == 2 else 0,
    )


def report(cameras: Sequence[Camera], mesh: Mesh, scene: Scene, settings: EvaluationSettings) -> CoverageReport:
    """Metrics over all pieces; resolution is read under each piece's principal camera."""
    field_, fusion = fuse_mesh(cameras, mesh, scene, settings.thold, settings.fusion_method)
    result = build_report(fusion.strengths, fusion.principals, field_.resolution, mesh, settings.thold, fusion.method)
    logger.debug(
        f"Report: {len(cameras)} cameras, ratio {result.recognized_ratio:.4f}, area {result.recognized_area:.6f} m²"
    )
    return result
