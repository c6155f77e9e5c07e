"""Axis-aligned bounding-volume hierarchy over scene triangles with batched segment queries."""

import logging
from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from .errors import DomainError

logger = logging.getLogger(__name__)

ENDPOINT_TOLERANCE = 1e-9
BARYCENTRIC_SLACK = 1e-12
PARALLEL_EPSILON = 1e-14
LEAF_SIZE = 8


def segment_triangle_hits(
    starts: np.ndarray,
    ends: np.ndarray,
    triangles: np.ndarray,
    endpoint_tolerance: float = ENDPOINT_TOLERANCE,
) -> np.ndarray:
    """Möller–Trumbore for S open segments against T closed triangles, shape (S, T).

    Hits closer than endpoint_tolerance (m) to either segment end are ignored,
    as are segments parallel to a triangle's plane.
    """
    starts = np.asarray(starts, dtype=float).reshape(-1, 3)
    ends = np.asarray(ends, dtype=float).reshape(-1, 3)
    triangles = np.asarray(triangles, dtype=float).reshape(-1, 3, 3)
    direction = ends - starts
    length = np.linalg.norm(direction, axis=1)

    v0 = triangles[:, 0]
    e1 = triangles[:, 1] - v0
    e2 = triangles[:, 2] - v0

    p = np.cross(direction[:, None, :], e2[None, :, :])
    det = np.einsum("tj,stj->st", e1, p)
    scale = length[:, None] * np.linalg.norm(e1, axis=1)[None, :] * np.linalg.norm(e2, axis=1)[None, :]
    parallel = np.abs(det) <= PARALLEL_EPSILON * scale
    inv_det = 1.0 / np.where(parallel, 1.0, det)

    tvec = starts[:, None, :] - v0[None, :, :]
    u = np.einsum("stj,stj->st", tvec, p) * inv_det
    q = np.cross(tvec, e1[None, :, :])
    v = np.einsum("sj,stj->st", direction, q) * inv_det
    t = np.einsum("tj,stj->st", e2, q) * inv_det

    margin = (endpoint_tolerance / np.where(length > 0, length, 1.0))[:, None]
    inside = (u >= -BARYCENTRIC_SLACK) & (v >= -BARYCENTRIC_SLACK) & (u + v <= 1.0 + BARYCENTRIC_SLACK)
    return ~parallel & inside & (t > margin) & (t < 1.0 - margin)


@dataclass
class _Node:
    lower: np.ndarray
    upper: np.ndarray
    left: int = -1
    right: int = -1
    start: int = 0
    count: int = 0


class TriangleBVH:
    """Flattened hierarchy; node 0 is the root, leaves own order[start:start + count]."""

    def __init__(self, triangles: np.ndarray, leaf_size: int = LEAF_SIZE):
        self.triangles = np.asarray(triangles, dtype=float).reshape(-1, 3, 3)
        self.leaf_size = leaf_size
        self.order = np.arange(len(self.triangles))
        nodes: List[_Node] = []
        if len(self.triangles):
            self._build(nodes, 0, len(self.triangles))
        self.node_lower = np.array([n.lower for n in nodes]).reshape(-1, 3)
        self.node_upper = np.array([n.upper for n in nodes]).reshape(-1, 3)
        self.node_left = np.array([n.left for n in nodes], dtype=int)
        self.node_right = np.array([n.right for n in nodes], dtype=int)
        self.node_start = np.array([n.start for n in nodes], dtype=int)
        self.node_count = np.array([n.count for n in nodes], dtype=int)
        logger.debug(f"Built BVH with {len(nodes)} nodes over {len(self.triangles)} triangles")

    def __len__(self) -> int:
        return len(self.triangles)

    def _build(self, nodes: List[_Node], start: int, stop: int) -> int:
        members = self.order[start:stop]
        corners = self.triangles[members].reshape(-1, 3)
        node = _Node(corners.min(axis=0), corners.max(axis=0))
        index = len(nodes)
        nodes.append(node)
        count = stop - start
        if count <= self.leaf_size:
            node.start, node.count = start, count
            return index
        centroids = self.triangles[members].mean(axis=1)
        axis = int(np.argmax(centroids.max(axis=0) - centroids.min(axis=0)))
        # Stable sort keeps the build deterministic for equal centroids.
        ranked = np.argsort(centroids[:, axis], kind="stable")
        self.order[start:stop] = members[ranked]
        middle = start + count // 2
        node.left = self._build(nodes, start, middle)
        node.right = self._build(nodes, middle, stop)
        return index

    def _box_hits(self, node: int, starts: np.ndarray, direction: np.ndarray) -> np.ndarray:
        pad = ENDPOINT_TOLERANCE
        lower = self.node_lower[node] - pad
        upper = self.node_upper[node] + pad
        with np.errstate(divide="ignore", invalid="ignore"):
            inv = 1.0 / direction
            t1 = (lower - starts) * inv
            t2 = (upper - starts) * inv
        near = np.minimum(t1, t2)
        far = np.maximum(t1, t2)
        flat = direction == 0
        within = (starts >= lower) & (starts <= upper)
        near = np.where(flat, np.where(within, -np.inf, np.inf), near)
        far = np.where(flat, np.where(within, np.inf, -np.inf), far)
        enter = near.max(axis=1)
        leave = far.min(axis=1)
        return (enter <= leave) & (leave >= 0.0) & (enter <= 1.0)

    def segments_blocked(
        self,
        starts: np.ndarray,
        ends: np.ndarray,
        exclude: Optional[np.ndarray] = None,
    ) -> np.ndarray:
        """For each segment, whether its open interior crosses a triangle other than exclude[s]."""
        starts = np.asarray(starts, dtype=float).reshape(-1, 3)
        ends = np.asarray(ends, dtype=float).reshape(-1, 3)
        if exclude is None:
            exclude = np.full(len(starts), -1, dtype=int)
        exclude = np.asarray(exclude, dtype=int)
        blocked = np.zeros(len(starts), dtype=bool)
        if len(starts) == 0 or len(self.triangles) == 0:
            return blocked
        if np.any(np.all(starts == ends, axis=1)):
            raise DomainError("Segments must have distinct endpoints")
        direction = ends - starts

        stack = [(0, np.arange(len(starts)))]
        while stack:
            node, active = stack.pop()
            active = active[~blocked[active]]
            if active.size == 0:
                continue
            active = active[self._box_hits(node, starts[active], direction[active])]
            if active.size == 0:
                continue
            if self.node_left[node] < 0:
                start, count = self.node_start[node], self.node_count[node]
                ids = self.order[start : start + count]
                hits = segment_triangle_hits(starts[active], ends[active], self.triangles[ids])
                hits &= ids[None, :] != exclude[active][:, None]
                blocked[active[hits.any(axis=1)]] = True
            else:
                stack.append((self.node_right[node], active))
                stack.append((self.node_left[node], active))
        return blocked

    def crossing_count(self, start: np.ndarray, end: np.ndarray) -> int:
        """Number of triangles crossed by one segment (brute force)."""
        if len(self.triangles) == 0:
            return 0
        hits = segment_triangle_hits(start, end, self.triangles, endpoint_tolerance=0.0)
        return int(hits.sum())
