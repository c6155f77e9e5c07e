"""Closed placement-exclusion volumes."""

import logging
from dataclasses import dataclass
from typing import Any, Dict, List, Tuple, Union

import numpy as np

from .errors import DomainError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class BoxRegion:
    """Closed axis-aligned box."""

    lower: Tuple[float, float, float]
    upper: Tuple[float, float, float]

    def contains(self, point) -> bool:
        p = np.asarray(point, dtype=float)
        return bool(np.all(p >= np.asarray(self.lower)) and np.all(p <= np.asarray(self.upper)))

    def validate(self) -> Tuple[bool, List[str]]:
        errors = []
        if len(self.lower) != 3 or len(self.upper) != 3:
            errors.append("box region needs 3-component lower and upper corners")
        elif any(lo > hi for lo, hi in zip(self.lower, self.upper)):
            errors.append(f"box region lower {self.lower} exceeds upper {self.upper}")
        return len(errors) == 0, errors

    def to_dict(self) -> Dict[str, Any]:
        return {"type": "box", "lower": list(self.lower), "upper": list(self.upper)}


@dataclass(frozen=True)
class CylinderRegion:
    """Closed vertical cylinder around (center_x, center_y) between z_min and z_max."""

    center_x: float
    center_y: float
    radius: float
    z_min: float
    z_max: float

    def contains(self, point) -> bool:
        x, y, z = (float(c) for c in point)
        dx, dy = x - self.center_x, y - self.center_y
        return dx * dx + dy * dy <= self.radius * self.radius and self.z_min <= z <= self.z_max

    def validate(self) -> Tuple[bool, List[str]]:
        errors = []
        if not self.radius > 0:
            errors.append(f"cylinder region radius must be positive, got {self.radius!r}")
        if self.z_min > self.z_max:
            errors.append(f"cylinder region z_min {self.z_min} exceeds z_max {self.z_max}")
        return len(errors) == 0, errors

    def to_dict(self) -> Dict[str, Any]:
        return {
            "type": "cylinder",
            "center": [self.center_x, self.center_y],
            "radius": self.radius,
            "z_min": self.z_min,
            "z_max": self.z_max,
        }


Region = Union[BoxRegion, CylinderRegion]


def region_from_dict(data: Dict[str, Any]) -> Region:
    """Box or cylinder region from its config mapping."""
    kind = str(data.get("type", "")).lower()
    try:
        if kind == "box":
            return BoxRegion(
                tuple(float(c) for c in data["lower"]),
                tuple(float(c) for c in data["upper"]),
            )
        if kind == "cylinder":
            cx, cy = (float(c) for c in data["center"])
            return CylinderRegion(cx, cy, float(data["radius"]), float(data["z_min"]), float(data["z_max"]))
    except (KeyError, TypeError, ValueError) as e:
        raise DomainError(f"Malformed {kind} region {data!r}: {e}") from e
    raise DomainError(f"Unknown region type {data.get('type')!r} (expected 'box' or 'cylinder')")
