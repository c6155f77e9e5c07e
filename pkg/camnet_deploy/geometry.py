"""Coordinate frames, rotations and triangle meshes of directional points."""

import logging
import math
from dataclasses import dataclass, field
from typing import Iterator, List, Sequence, Tuple

import numpy as np

from .errors import DegenerateTriangleError, DomainError

logger = logging.getLogger(__name__)

# Fixed axis permutation applied before yaw/pitch/roll.
BASE_AXES = np.array(
    [
        [1.0, 0.0, 0.0],
        [0.0, 0.0, -1.0],
        [0.0, 1.0, 0.0],
    ]
)

DEGENERATE_AREA = 1e-12
UNIT_TOLERANCE = 1e-9
HALF_PI = math.pi / 2
TWO_PI = 2.0 * math.pi

Vector3 = Tuple[float, float, float]


def wrap_yaw(alpha: float) -> float:
    """Wrap an angle into [-π, π)."""
    wrapped = (alpha + math.pi) % TWO_PI - math.pi
    if wrapped >= math.pi:
        wrapped -= TWO_PI
    return wrapped


@dataclass(frozen=True)
class Pose6:
    """Six-DOF pose: world position (m) plus yaw, pitch and roll (rad)."""

    position: Vector3
    alpha: float = 0.0
    beta: float = 0.0
    gamma: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "position", tuple(float(c) for c in self.position))
        for name in ("alpha", "beta", "gamma"):
            object.__setattr__(self, name, float(getattr(self, name)))
        if len(self.position) != 3:
            raise DomainError(f"Pose position needs 3 components, got {len(self.position)}")

    @property
    def orientation(self) -> Vector3:
        return (self.alpha, self.beta, self.gamma)

    @property
    def position_array(self) -> np.ndarray:
        return np.asarray(self.position, dtype=float)

    def as_genes(self) -> Tuple[float, ...]:
        """Return (x, y, z, alpha, beta, gamma)."""
        return (*self.position, self.alpha, self.beta, self.gamma)

    @classmethod
    def from_genes(cls, genes: Sequence[float]) -> "Pose6":
        x, y, z, alpha, beta, gamma = (float(g) for g in genes)
        return cls((x, y, z), alpha, beta, gamma)

    def normalized(self) -> "Pose6":
        """Wrap yaw into [-π, π); pitch or roll outside [-π/2, π/2] is rejected."""
        for name, value in (("pitch", self.beta), ("roll", self.gamma)):
            if not -HALF_PI <= value <= HALF_PI:
                raise DomainError(f"{name} {value!r} outside [-π/2, π/2]")
        return Pose6(self.position, wrap_yaw(self.alpha), self.beta, self.gamma)

    def to_dict(self) -> dict:
        x, y, z = self.position
        return {"x": x, "y": y, "z": z, "alpha": self.alpha, "beta": self.beta, "gamma": self.gamma}

    @classmethod
    def from_dict(cls, data: dict) -> "Pose6":
        return cls(
            (float(data["x"]), float(data["y"]), float(data["z"])),
            float(data.get("alpha", 0.0)),
            float(data.get("beta", 0.0)),
            float(data.get("gamma", 0.0)),
        )


def rotation_matrix(orientation: Sequence[float]) -> np.ndarray:
    """World-to-local rotation R = Rγ·Rβ·Rα·B."""
    alpha, beta, gamma = orientation
    ca, sa = math.cos(alpha), math.sin(alpha)
    cb, sb = math.cos(beta), math.sin(beta)
    cg, sg = math.cos(gamma), math.sin(gamma)
    r_alpha = np.array([[ca, 0.0, sa], [0.0, 1.0, 0.0], [-sa, 0.0, ca]])
    r_beta = np.array([[1.0, 0.0, 0.0], [0.0, cb, -sb], [0.0, sb, cb]])
    r_gamma = np.array([[cg, -sg, 0.0], [sg, cg, 0.0], [0.0, 0.0, 1.0]])
    return r_gamma @ r_beta @ r_alpha @ BASE_AXES


def world_to_local(point, pose: Pose6) -> np.ndarray:
    """World point (m) in the camera frame of pose."""
    return rotation_matrix(pose.orientation) @ (np.asarray(point, dtype=float) - pose.position_array)


def local_to_world(point_local, pose: Pose6) -> np.ndarray:
    """Camera-frame point back to world coordinates."""
    return pose.position_array + rotation_matrix(pose.orientation).T @ np.asarray(point_local, dtype=float)


def look_at_pose(position, target, roll: float = 0.0) -> Pose6:
    """Pose at `position` whose optical axis points at `target`."""
    position = np.asarray(position, dtype=float)
    direction = np.asarray(target, dtype=float) - position
    norm = float(np.linalg.norm(direction))
    if norm == 0.0:
        raise DomainError("look_at_pose needs distinct position and target")
    dx, dy, dz = direction / norm
    beta = math.asin(max(-1.0, min(1.0, -dz)))
    alpha = math.atan2(-dx, dy) if math.hypot(dx, dy) > 0.0 else 0.0
    return Pose6(tuple(position), wrap_yaw(alpha), beta, roll)


def project_onto_plane(normal, v) -> np.ndarray:
    """Component of v lying in the plane orthogonal to normal."""
    normal = np.asarray(normal, dtype=float)
    v = np.asarray(v, dtype=float)
    n2 = float(normal @ normal)
    if not n2 > 0.0:
        raise DomainError("Cannot project onto the plane of a zero normal")
    return v - (float(normal @ v) / n2) * normal


def normal_from_orientation(rho: float, eta: float) -> np.ndarray:
    """Unit normal with polar angle rho and azimuth eta."""
    return np.array([math.sin(rho) * math.cos(eta), math.sin(rho) * math.sin(eta), math.cos(rho)])


def orientation_from_normal(n) -> Tuple[float, float]:
    """Inverse of normal_from_orientation; η is 0 at the poles."""
    nx, ny, nz = (float(c) for c in n)
    norm = math.sqrt(nx * nx + ny * ny + nz * nz)
    if abs(norm - 1.0) > UNIT_TOLERANCE:
        raise DomainError(f"Normal must be a unit vector, got norm {norm!r}")
    planar = math.hypot(nx, ny)
    rho = math.atan2(planar, nz)
    if planar == 0.0:
        return rho, 0.0
    return rho, wrap_yaw(math.atan2(ny, nx))


def triangle_area(vertices) -> float:
    """Half the norm of the edge cross product."""
    v = np.asarray(vertices, dtype=float)
    return 0.5 * float(np.linalg.norm(np.cross(v[1] - v[0], v[2] - v[0])))


def triangle_normal(vertices) -> np.ndarray:
    """Unit normal by right-hand winding."""
    v = np.asarray(vertices, dtype=float)
    cross = np.cross(v[1] - v[0], v[2] - v[0])
    norm = float(np.linalg.norm(cross))
    if norm == 0.0:
        raise DomainError("Degenerate triangle has no normal")
    return cross / norm


@dataclass(frozen=True)
class DirectionalPoint:
    """One triangle piece: centroid, face orientation, vertices and area weight."""

    id: int
    center: Vector3
    rho: float
    eta: float
    vertices: Tuple[Vector3, Vector3, Vector3]
    area: float
    # In-plane rotation of the piece frame; unused downstream.
    mu: float = 0.0

    @property
    def normal(self) -> np.ndarray:
        return normal_from_orientation(self.rho, self.eta)

    @property
    def center_array(self) -> np.ndarray:
        return np.asarray(self.center, dtype=float)

    @property
    def vertex_array(self) -> np.ndarray:
        return np.asarray(self.vertices, dtype=float)

    @classmethod
    def from_vertices(cls, piece_id: int, vertices, area: float = None) -> "DirectionalPoint":
        v = np.asarray(vertices, dtype=float)
        rho, eta = orientation_from_normal(triangle_normal(v))
        return cls(
            id=piece_id,
            center=tuple(float(c) for c in v.mean(axis=0)),
            rho=rho,
            eta=eta,
            vertices=tuple(tuple(float(c) for c in row) for row in v),
            area=triangle_area(v) if area is None else float(area),
        )


@dataclass(frozen=True)
class Mesh:
    """Ordered directional points with ids 1..K."""

    pieces: Tuple[DirectionalPoint, ...]
    total_area: float = field(init=False)
    _triangles: np.ndarray = field(init=False, repr=False, compare=False)
    _centers: np.ndarray = field(init=False, repr=False, compare=False)
    _normals: np.ndarray = field(init=False, repr=False, compare=False)
    _areas: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        pieces = tuple(self.pieces)
        object.__setattr__(self, "pieces", pieces)
        expected = list(range(1, len(pieces) + 1))
        if [p.id for p in pieces] != expected:
            raise DomainError("Mesh piece ids must be 1..K in order")
        triangles = np.array([p.vertices for p in pieces], dtype=float).reshape(-1, 3, 3)
        centers = np.array([p.center for p in pieces], dtype=float).reshape(-1, 3)
        normals = np.array([p.normal for p in pieces], dtype=float).reshape(-1, 3)
        areas = np.array([p.area for p in pieces], dtype=float)
        for name, array in (("_triangles", triangles), ("_centers", centers), ("_normals", normals), ("_areas", areas)):
            array.setflags(write=False)
            object.__setattr__(self, name, array)
        object.__setattr__(self, "total_area", math.fsum(areas))

    def __len__(self) -> int:
        return len(self.pieces)

    def triangles(self) -> np.ndarray:
        return self._triangles

    def centers(self) -> np.ndarray:
        return self._centers

    def normals(self) -> np.ndarray:
        return self._normals

    def areas(self) -> np.ndarray:
        return self._areas

    @property
    def is_closed(self) -> bool:
        """Every edge is shared by exactly two faces (vertices matched by coordinates)."""
        if not self.pieces:
            return False
        keys = np.round(self._triangles, 9)
        edges = {}
        for tri in keys:
            corners = [tuple(c) for c in tri]
            for a, b in ((0, 1), (1, 2), (2, 0)):
                edge = tuple(sorted((corners[a], corners[b])))
                edges[edge] = edges.get(edge, 0) + 1
        return all(count == 2 for count in edges.values())

    def bounds(self) -> Tuple[np.ndarray, np.ndarray]:
        flat = self._triangles.reshape(-1, 3)
        return flat.min(axis=0), flat.max(axis=0)


def _subdivide(vertices: np.ndarray, depth: int) -> Iterator[np.ndarray]:
    """Midpoint 1-to-4 split: corner children in vertex order, then the center child."""
    if depth == 0:
        yield vertices
        return
    a, b, c = vertices
    ab, bc, ca = (a + b) / 2.0, (b + c) / 2.0, (c + a) / 2.0
    for child in ((a, ab, ca), (ab, b, bc), (ca, bc, c), (ab, bc, ca)):
        yield from _subdivide(np.array(child), depth - 1)


def subdivision_depth(area: float, sigma: float) -> int:
    """Midpoint splits needed to bring area down to sigma."""
    depth = 0
    while area / 4.0 ** depth > sigma:
        depth += 1
    return depth


def refine_mesh(raw_triangles, sigma: float, drop_degenerate: bool = False) -> Mesh:
    """Split triangles until every piece has area ≤ sigma.

    Each level of subdivision hands every child exactly a quarter of its
    parent's area, so total area is conserved. Degenerate triangles raise
    DegenerateTriangleError unless drop_degenerate is set, in which case they
    are skipped with a warning.
    """
    if not sigma > 0:
        raise DomainError(f"Refinement threshold sigma must be positive, got {sigma!r}")
    triangles = np.asarray(raw_triangles, dtype=float).reshape(-1, 3, 3)
    pieces: List[DirectionalPoint] = []
    dropped = 0
    for index, tri in enumerate(triangles):
        area = triangle_area(tri)
        if area <= DEGENERATE_AREA:
            if not drop_degenerate:
                raise DegenerateTriangleError(index, area)
            dropped += 1
            logger.warning(f"Dropping degenerate triangle {index} (area {area:.3e} m²)")
            continue
        depth = subdivision_depth(area, sigma)
        child_area = area / 4.0 ** depth
        for child in _subdivide(tri, depth):
            pieces.append(DirectionalPoint.from_vertices(len(pieces) + 1, child, child_area))
    if dropped:
        logger.warning(f"Dropped {dropped} degenerate triangles")
    logger.debug(f"Refined {len(triangles)} triangles into {len(pieces)} pieces (sigma={sigma})")
    return Mesh(tuple(pieces))
