"""Per-(camera, piece) coverage criteria and radial coverage vectors."""

import logging
import math
from dataclasses import dataclass, field
from typing import Sequence, Tuple

import numpy as np

from .bvh import TriangleBVH, segment_triangle_hits
from .camera import Camera, in_fov, in_fov_batch, is_focused, resolution_batch, resolution_criterion
from .errors import DomainError
from .geometry import HALF_PI, DirectionalPoint, Mesh, project_onto_plane
from .regions import Region

logger = logging.getLogger(__name__)

# Skewed so parity rays avoid running along mesh edges.
_PARITY = np.array([0.5801, 0.5712, 0.5803])
PARITY_DIRECTION = _PARITY / np.linalg.norm(_PARITY)


@dataclass(frozen=True)
class CoverageGates:
    fov: bool = False
    focus: bool = False
    occlusion: bool = False

    @property
    def passed(self) -> bool:
        return self.fov and self.focus and self.occlusion


@dataclass(frozen=True, eq=False)
class CoverageDecomposition:
    """Radial coverage vector split into fusion (in-plane) and effective (normal) parts."""

    cv: np.ndarray
    cf: np.ndarray
    cs: np.ndarray
    cs_norm: float
    elevation: float
    resolution: float = 0.0
    gates: CoverageGates = field(default_factory=CoverageGates)

    @classmethod
    def zero(cls, elevation: float, gates: CoverageGates) -> "CoverageDecomposition":
        return cls(np.zeros(3), np.zeros(3), np.zeros(3), 0.0, elevation, 0.0, gates)


@dataclass(frozen=True, eq=False)
class Scene:
    """Object mesh, obstacle meshes and forbidden placement regions.

    Occluder triangle ids 0..K-1 belong to the object (piece id minus one);
    obstacle triangles follow.
    """

    object: Mesh
    obstacles: Tuple[Mesh, ...] = ()
    forbidden_regions: Tuple[Region, ...] = ()
    occluders: TriangleBVH = field(init=False, repr=False)
    _closed_obstacles: Tuple[Tuple[Mesh, TriangleBVH], ...] = field(init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "obstacles", tuple(self.obstacles))
        object.__setattr__(self, "forbidden_regions", tuple(self.forbidden_regions))
        parts = [self.object.triangles()] + [m.triangles() for m in self.obstacles]
        object.__setattr__(self, "occluders", TriangleBVH(np.concatenate(parts, axis=0)))
        closed = []
        for index, obstacle in enumerate(self.obstacles):
            if obstacle.is_closed:
                closed.append((obstacle, TriangleBVH(obstacle.triangles())))
            else:
                logger.debug(f"Obstacle {index} is an open surface; it occludes but encloses no volume")
        object.__setattr__(self, "_closed_obstacles", tuple(closed))

    @property
    def piece_count(self) -> int:
        return len(self.object)

    def inside_obstacle(self, point) -> bool:
        """Ray-parity test against every closed obstacle mesh."""
        p = np.asarray(point, dtype=float)
        for obstacle, bvh in self._closed_obstacles:
            lower, upper = obstacle.bounds()
            if np.any(p < lower) or np.any(p > upper):
                continue
            reach = 2.0 * float(np.linalg.norm(upper - lower)) + 1.0
            far = p + reach * PARITY_DIRECTION
            if bvh.crossing_count(p, far) % 2 == 1:
                return True
        return False


def elevation_angle(piece: DirectionalPoint, cam_position) -> float:
    """Angle between the piece normal and the ray toward the camera, in [0, π]."""
    offset = np.asarray(cam_position, dtype=float) - piece.center_array
    distance = float(np.linalg.norm(offset))
    if distance == 0.0:
        raise DomainError("Camera position coincides with the piece center")
    cosine = float(piece.normal @ offset) / distance
    return math.acos(max(-1.0, min(1.0, cosine)))


def segment_intersects_triangle(a, b, tri_vertices) -> bool:
    """Segment ab hits the triangle."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if np.array_equal(a, b):
        raise DomainError("Segment endpoints must differ")
    return bool(segment_triangle_hits(a, b, tri_vertices)[0, 0])


def occlusion_criterion(piece: DirectionalPoint, camera: Camera, scene: Scene) -> int:
    """1 when the front face is visible and no vertex ray is blocked, else 0."""
    if elevation_angle(piece, camera.position) >= HALF_PI:
        return 0
    starts = np.repeat(camera.position[None, :], 3, axis=0)
    exclude = np.full(3, piece.id - 1, dtype=int)
    blocked = scene.occluders.segments_blocked(starts, piece.vertex_array, exclude)
    return 0 if blocked.any() else 1


def radial_coverage_vector(piece: DirectionalPoint, camera: Camera, scene: Scene) -> CoverageDecomposition:
    """Gate FOV, focus and occlusion in that order, then build cv, cf and cs."""
    offset = piece.center_array - camera.position
    distance = float(np.linalg.norm(offset))
    if distance == 0.0:
        raise DomainError("Camera position coincides with the piece center")
    normal = piece.normal
    cos_zeta = max(-1.0, min(1.0, float(normal @ -offset) / distance))
    elevation = math.acos(cos_zeta)

    local = camera.to_local_mm(piece.center_array)
    fov = in_fov(local, camera.frustum)
    focus = fov and is_focused(float(local[2]), camera.frustum)
    visible = focus and occlusion_criterion(piece, camera, scene) == 1
    gates = CoverageGates(fov, focus, visible)
    if not visible:
        return CoverageDecomposition.zero(elevation, gates)

    resolution = resolution_criterion(float(local[2]), camera.intrinsics)
    cv = resolution * offset / distance
    cf = project_onto_plane(normal, cv)
    cs = cv - cf
    return CoverageDecomposition(cv, cf, cs, cos_zeta * resolution, elevation, resolution, gates)


@dataclass(frozen=True, eq=False)
class CoverageField:
    """Decompositions for N cameras × K pieces as stacked arrays."""

    cv: np.ndarray  # (N, K, 3)
    cf: np.ndarray  # (N, K, 3)
    cs_norm: np.ndarray  # (N, K)
    elevation: np.ndarray  # (N, K)
    resolution: np.ndarray  # (N, K)

    @property
    def camera_count(self) -> int:
        return self.cs_norm.shape[0]

    @property
    def piece_count(self) -> int:
        return self.cs_norm.shape[1]

    def decomposition(self, camera_index: int, piece_index: int) -> CoverageDecomposition:
        cv = self.cv[camera_index, piece_index].copy()
        cf = self.cf[camera_index, piece_index].copy()
        resolution = float(self.resolution[camera_index, piece_index])
        return CoverageDecomposition(
            cv,
            cf,
            cv - cf,
            float(self.cs_norm[camera_index, piece_index]),
            float(self.elevation[camera_index, piece_index]),
            resolution,
            CoverageGates(resolution > 0, resolution > 0, resolution > 0),
        )


def coverage_field(cameras: Sequence[Camera], scene: Scene, mesh: Mesh = None) -> CoverageField:
    """Batched radial coverage vectors of every camera over every piece.

    `mesh` defaults to the scene object; piece ids must match the scene's
    occluder ids for self-exclusion to hold.
    """
    mesh = scene.object if mesh is None else mesh
    centers = mesh.centers()
    normals = mesh.normals()
    triangles = mesh.triangles()
    n_cams, n_pieces = len(cameras), len(mesh)
    cv = np.zeros((n_cams, n_pieces, 3))
    cf = np.zeros((n_cams, n_pieces, 3))
    cs_norm = np.zeros((n_cams, n_pieces))
    elevation = np.zeros((n_cams, n_pieces))
    resolution = np.zeros((n_cams, n_pieces))
    piece_ids = np.array([p.id - 1 for p in mesh.pieces], dtype=int)

    for i, camera in enumerate(cameras):
        position = camera.position
        offset = centers - position
        distance = np.linalg.norm(offset, axis=1)
        apart = distance > 0
        safe_distance = np.where(apart, distance, 1.0)
        cos_zeta = np.clip(np.einsum("kj,kj->k", normals, -offset) / safe_distance, -1.0, 1.0)
        elevation[i] = np.arccos(cos_zeta)

        local = camera.to_local_mm(centers)
        candidates = apart & in_fov_batch(local, camera.frustum)
        candidates &= (local[:, 2] >= camera.frustum.d_n) & (local[:, 2] <= camera.frustum.d_f)
        candidates &= elevation[i] < HALF_PI
        idx = np.flatnonzero(candidates)
        if idx.size:
            starts = np.repeat(position[None, :], 3 * idx.size, axis=0)
            ends = triangles[idx].reshape(-1, 3)
            exclude = np.repeat(piece_ids[idx], 3)
            blocked = scene.occluders.segments_blocked(starts, ends, exclude).reshape(-1, 3).any(axis=1)
            idx = idx[~blocked]
        if idx.size == 0:
            continue

        res = resolution_batch(local[idx, 2], camera.intrinsics)
        vectors = res[:, None] * offset[idx] / distance[idx][:, None]
        n = normals[idx]
        along = np.einsum("kj,kj->k", n, vectors) / np.einsum("kj,kj->k", n, n)
        cv[i, idx] = vectors
        cf[i, idx] = vectors - along[:, None] * n
        cs_norm[i, idx] = cos_zeta[idx] * res
        resolution[i, idx] = res
    return CoverageField(cv, cf, cs_norm, elevation, resolution)
