"""Mesh file ingestion (STL, OBJ) and colored PLY export."""

import io
import logging
import re
from pathlib import Path
from typing import List, Sequence, Tuple, Union

import numpy as np
import plyfile
import trimesh

from .coverage import Scene
from .errors import MeshParseError
from .geometry import Mesh, refine_mesh
from .regions import Region

logger = logging.getLogger(__name__)

STL_HEADER = 84
STL_RECORD_SIZE = 50

RECOGNIZED_LIGHT = np.array([255.0, 250.0, 205.0])
RECOGNIZED_SATURATED = np.array([200.0, 30.0, 30.0])
UNRECOGNIZED_LIGHT = np.array([230.0, 245.0, 230.0])
UNRECOGNIZED_SATURATED = np.array([30.0, 140.0, 60.0])
UNCOVERED_COLOR = tuple(int(c) for c in UNRECOGNIZED_LIGHT)

PathLike = Union[str, Path]


def _is_ascii_stl(data: bytes) -> bool:
    return data.lstrip()[:5].lower() == b"solid" and b"\0" not in data


def _check_stl(path: Path, data: bytes) -> bytes:
    """Bytes trimesh should parse; truncated binary files fail with the offset of the first short record."""
    if _is_ascii_stl(data):
        loops = len(re.findall(rb"\bendloop\b", data))
        vertices = len(re.findall(rb"\bvertex\b", data))
        if vertices != 3 * loops:
            raise MeshParseError(path, f"{vertices} vertices in {loops} facet loops, expected three per loop")
        return data
    if len(data) < STL_HEADER:
        raise MeshParseError(path, "file too short for a binary STL header", byte_offset=len(data))
    count = int.from_bytes(data[STL_HEADER - 4 : STL_HEADER], "little")
    expected = STL_HEADER + count * STL_RECORD_SIZE
    if len(data) < expected:
        complete = (len(data) - STL_HEADER) // STL_RECORD_SIZE
        raise MeshParseError(
            path,
            f"binary STL truncated after {complete} of {count} triangles",
            byte_offset=STL_HEADER + complete * STL_RECORD_SIZE,
        )
    if len(data) > expected:
        logger.warning(f"{path.name}: {len(data) - expected} trailing bytes after {count} STL triangles ignored")
    return data[:expected]


def read_stl(path: PathLike) -> np.ndarray:
    """Triangles (T, 3, 3) from an ASCII or binary STL file."""
    path = Path(path)
    data = _check_stl(path, path.read_bytes())
    try:
        mesh = trimesh.load(io.BytesIO(data), file_type="stl", force="mesh", process=False)
    except Exception as e:
        raise MeshParseError(path, f"unreadable STL: {e}") from e
    triangles = np.asarray(mesh.triangles, dtype=float).reshape(-1, 3, 3)
    if len(triangles) == 0:
        raise MeshParseError(path, "no facets found", byte_offset=0)
    if not np.all(np.isfinite(triangles)):
        bad = int(np.flatnonzero(~np.isfinite(triangles).all(axis=(1, 2)))[0])
        raise MeshParseError(path, f"non-finite vertex in triangle {bad}")
    logger.debug(f"Read {len(triangles)} triangles from STL {path.name}")
    return triangles


def read_obj(path: PathLike) -> np.ndarray:
    """Triangles (T, 3, 3) from a Wavefront OBJ file; any non-triangular face is an error."""
    path = Path(path)
    vertices: List[List[float]] = []
    faces: List[Tuple[List[int], int]] = []
    polygons: List[int] = []
    offset = 0
    for raw in path.read_bytes().splitlines(keepends=True):
        line_offset, offset = offset, offset + len(raw)
        tokens = raw.split(b"#", 1)[0].split()
        if not tokens:
            continue
        if tokens[0] == b"v":
            try:
                vertices.append([float(t) for t in tokens[1:4]])
            except ValueError:
                raise MeshParseError(path, f"malformed vertex {raw.strip()!r}", byte_offset=line_offset) from None
            if len(vertices[-1]) != 3:
                raise MeshParseError(path, "vertex needs three coordinates", byte_offset=line_offset)
        elif tokens[0] == b"f":
            face_number = len(faces) + len(polygons) + 1
            if len(tokens) != 4:
                polygons.append(face_number)
                continue
            try:
                refs = [int(t.split(b"/")[0]) for t in tokens[1:]]
            except ValueError:
                raise MeshParseError(path, f"malformed face {raw.strip()!r}", byte_offset=line_offset) from None
            faces.append((refs, line_offset))
    if polygons:
        raise MeshParseError(
            path, f"{len(polygons)} non-triangular faces: {polygons}", face_indices=polygons
        )
    if not faces:
        raise MeshParseError(path, "no faces found", byte_offset=0)
    table = np.array(vertices, dtype=float).reshape(-1, 3)
    triangles = np.empty((len(faces), 3, 3))
    for t, (refs, line_offset) in enumerate(faces):
        for corner, ref in enumerate(refs):
            index = ref - 1 if ref > 0 else len(table) + ref
            if ref == 0 or not 0 <= index < len(table):
                raise MeshParseError(path, f"face references missing vertex {ref}", byte_offset=line_offset)
            triangles[t, corner] = table[index]
    logger.debug(f"Read {len(triangles)} triangles and {len(table)} vertices from OBJ {path.name}")
    return triangles


def read_triangles(path: PathLike, scale: float = 1.0) -> np.ndarray:
    """Triangles from an .stl or .obj file, scaled to meters."""
    path = Path(path)
    suffix = path.suffix.lower()
    if suffix == ".stl":
        triangles = read_stl(path)
    elif suffix == ".obj":
        triangles = read_obj(path)
    else:
        raise MeshParseError(path, f"unsupported mesh format {suffix!r} (expected .stl or .obj)")
    return triangles * scale


def load_scene(
    object_path: PathLike,
    obstacle_paths: Sequence[PathLike] = (),
    sigma: float = float("inf"),
    forbidden_regions: Sequence[Region] = (),
    scale: float = 1.0,
) -> Scene:
    """Parse and refine the object; obstacles are kept unrefined."""
    obj = refine_mesh(read_triangles(object_path, scale), sigma, drop_degenerate=True)
    obstacles = tuple(
        refine_mesh(read_triangles(p, scale), float("inf"), drop_degenerate=True) for p in obstacle_paths
    )
    logger.info(f"Loaded {Path(object_path).name}: {len(obj)} pieces, {obj.total_area:.6f} m²")
    return Scene(obj, obstacles, tuple(forbidden_regions))


def color_for_strength(strength: float, recognized: bool, thold: float) -> Tuple[int, int, int]:
    """Linear ramp from light to saturated over [0, 2·thold]; hue separates recognized pieces."""
    if strength <= 0:
        return UNCOVERED_COLOR
    t = min(max(strength / (2.0 * thold), 0.0), 1.0)
    light, saturated = (
        (RECOGNIZED_LIGHT, RECOGNIZED_SATURATED) if recognized else (UNRECOGNIZED_LIGHT, UNRECOGNIZED_SATURATED)
    )
    rgb = np.rint(light + t * (saturated - light))
    return tuple(int(c) for c in rgb)


def write_colored_ply(path: PathLike, mesh: Mesh, strengths, recognized, thold: float) -> Path:
    """One face per piece with its own three vertices and an RGB color."""
    path = Path(path)
    triangles = mesh.triangles()
    vertex = np.zeros(3 * len(mesh), dtype=[("x", "f4"), ("y", "f4"), ("z", "f4")])
    flat = triangles.reshape(-1, 3)
    vertex["x"], vertex["y"], vertex["z"] = flat[:, 0], flat[:, 1], flat[:, 2]
    face = np.zeros(
        len(mesh), dtype=[("vertex_indices", "i4", (3,)), ("red", "u1"), ("green", "u1"), ("blue", "u1")]
    )
    face["vertex_indices"] = np.arange(3 * len(mesh), dtype=np.int32).reshape(-1, 3)
    colors = np.array(
        [color_for_strength(float(s), bool(r), thold) for s, r in zip(strengths, recognized)], dtype=np.uint8
    ).reshape(-1, 3)
    face["red"], face["green"], face["blue"] = colors[:, 0], colors[:, 1], colors[:, 2]
    elements = [plyfile.PlyElement.describe(vertex, "vertex"), plyfile.PlyElement.describe(face, "face")]
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as f:
        plyfile.PlyData(elements).write(f)
    logger.debug(f"Wrote {len(mesh)} colored faces to {path}")
    return path


def read_colored_ply(path: PathLike) -> Tuple[int, np.ndarray]:
    """Face count and (F, 3) uint8 face colors."""
    ply = plyfile.PlyData.read(str(path))
    face = ply["face"]
    colors = np.stack([face["red"], face["green"], face["blue"]], axis=1).astype(np.uint8)
    return face.count, colors
