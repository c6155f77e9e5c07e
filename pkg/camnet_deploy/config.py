"""YAML run configuration and pose files."""

import logging
import math
import os
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import yaml

from .camera import CameraIntrinsics, derive_fov_angles
from .errors import CamnetError, ConfigError
from .fusion import FusionMethod
from .geometry import Pose6
from .objective import EvaluationSettings
from .optimizer import CameraDof, DofSpec, IgaParams
from .regions import Region, region_from_dict

logger = logging.getLogger(__name__)

WORKERS_ENV = "CAMNET_WORKERS"


def _section(data: Dict[str, Any], name: str) -> Dict[str, Any]:
    value = data.get(name) or {}
    if not isinstance(value, dict):
        raise ConfigError([f"'{name}' must be a mapping"])
    return value


@dataclass(frozen=True)
class CameraConfig:
    intrinsics: CameraIntrinsics
    delta: float
    fov_override: Optional[Tuple[float, float, float, float]] = None

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "CameraConfig":
        override = data.get("fov_override")
        return cls(
            intrinsics=CameraIntrinsics.from_dict(data.get("intrinsics") or {}),
            delta=float(data.get("delta", 0.0)),
            fov_override=tuple(float(a) for a in override) if override is not None else None,
        )

    def validate(self) -> Tuple[bool, List[str]]:
        ok, errors = self.intrinsics.validate()
        errors = list(errors)
        if not self.delta > 0:
            errors.append(f"camera.delta must be positive, got {self.delta}")
        if self.fov_override is not None:
            if len(self.fov_override) != 4 or any(not 0 <= a < math.pi / 2 for a in self.fov_override):
                errors.append("camera.fov_override needs four angles in [0, π/2)")
            elif ok:
                drift = max(abs(a - b) for a, b in zip(derive_fov_angles(self.intrinsics), self.fov_override))
                if drift > 1e-6:
                    logger.warning(f"camera.fov_override departs from the intrinsics by {drift:.3e} rad")
        return len(errors) == 0, errors


@dataclass(frozen=True)
class CoverageConfig:
    thold: float = 1.0
    sigma: float = 1e-4
    fusion_method: FusionMethod = FusionMethod.FULL

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "CoverageConfig":
        return cls(
            thold=float(data.get("thold", 1.0)),
            sigma=float(data.get("sigma", 1e-4)),
            fusion_method=FusionMethod.parse(data.get("fusion_method", "full")),
        )

    def validate(self) -> Tuple[bool, List[str]]:
        errors = []
        if not self.thold > 0:
            errors.append(f"coverage.thold must be positive, got {self.thold}")
        if not self.sigma > 0:
            errors.append(f"coverage.sigma must be positive, got {self.sigma}")
        return len(errors) == 0, errors


@dataclass(frozen=True)
class SceneConfig:
    object: Path
    obstacles: Tuple[Path, ...] = ()
    forbidden_regions: Tuple[Region, ...] = ()
    scale: float = 1.0

    @classmethod
    def from_dict(cls, data: Dict[str, Any], base_dir: Path) -> "SceneConfig":
        if "object" not in data:
            raise ConfigError(["scene.object is required"])
        return cls(
            object=_resolve(data["object"], base_dir),
            obstacles=tuple(_resolve(p, base_dir) for p in data.get("obstacles") or ()),
            forbidden_regions=tuple(region_from_dict(r) for r in data.get("forbidden_regions") or ()),
            scale=float(data.get("scale", 1.0)),
        )

    def validate(self) -> Tuple[bool, List[str]]:
        errors = []
        for path in (self.object, *self.obstacles):
            if not path.exists():
                errors.append(f"scene file not found: {path}")
        for region in self.forbidden_regions:
            errors.extend(region.validate()[1])
        if not self.scale > 0:
            errors.append(f"scene.scale must be positive, got {self.scale}")
        return len(errors) == 0, errors


@dataclass(frozen=True)
class DofConfig:
    cameras: int
    template: CameraDof

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "DofConfig":
        return cls(cameras=int(data.get("cameras", 1)), template=CameraDof.from_dict(data))

    def spec(self, cameras: Optional[int] = None) -> DofSpec:
        return DofSpec.uniform(self.cameras if cameras is None else cameras, self.template)

    def validate(self) -> Tuple[bool, List[str]]:
        errors = []
        if self.cameras < 0:
            errors.append(f"dof.cameras must be non-negative, got {self.cameras}")
        errors.extend(self.template.validate()[1])
        return len(errors) == 0, errors


def _resolve(value: Any, base_dir: Path) -> Path:
    path = Path(str(value)).expanduser()
    return path if path.is_absolute() else (base_dir / path)


@dataclass(frozen=True)
class RunConfig:
    camera: CameraConfig
    coverage: CoverageConfig
    scene: SceneConfig
    dof: DofConfig
    optimizer: IgaParams
    out_dir: Path
    source: Optional[Path] = None

    @classmethod
    def from_dict(cls, data: Dict[str, Any], base_dir: Path = Path(".")) -> "RunConfig":
        if not isinstance(data, dict):
            raise ConfigError(["configuration root must be a mapping"])
        errors: List[str] = []
        sections: Dict[str, Any] = {}
        builders = {
            "camera": lambda: CameraConfig.from_dict(_section(data, "camera")),
            "coverage": lambda: CoverageConfig.from_dict(_section(data, "coverage")),
            "scene": lambda: SceneConfig.from_dict(_section(data, "scene"), base_dir),
            "dof": lambda: DofConfig.from_dict(_section(data, "dof")),
            "optimizer": lambda: IgaParams.from_dict(_section(data, "optimizer")),
        }
        for name, build in builders.items():
            try:
                sections[name] = build()
            except ConfigError as e:
                errors.extend(e.errors)
            except KeyError as e:
                errors.append(f"{name}: missing required field {e.args[0]!r}")
            except (CamnetError, TypeError, ValueError) as e:
                errors.append(f"{name}: {e}")
        if errors:
            raise ConfigError(errors)
        output = _section(data, "output")
        return cls(
            out_dir=_resolve(output.get("out_dir", "out"), base_dir),
            **sections,
        )

    @classmethod
    def load(cls, path: Path) -> "RunConfig":
        path = Path(path)
        try:
            with open(path, "r", encoding="utf-8") as f:
                data = yaml.safe_load(f)
        except yaml.YAMLError as e:
            raise ConfigError([f"{path.name}: invalid YAML: {e}"]) from e
        config = replace(cls.from_dict(data or {}, path.parent), source=path)
        workers = os.getenv(WORKERS_ENV)
        if workers:
            try:
                config = replace(config, optimizer=replace(config.optimizer, workers=int(workers)))
            except ValueError:
                raise ConfigError([f"{WORKERS_ENV} must be an integer, got {workers!r}"]) from None
        config.ensure_valid()
        return config

    def validate(self) -> Tuple[bool, List[str]]:
        errors: List[str] = []
        for section in (self.camera, self.coverage, self.scene, self.dof):
            errors.extend(section.validate()[1])
        length = len(self.dof.template.active_genes) * max(self.dof.cameras, 1)
        errors.extend(self.optimizer.validate(length)[1])
        return len(errors) == 0, errors

    def ensure_valid(self) -> "RunConfig":
        ok, errors = self.validate()
        if not ok:
            raise ConfigError(errors)
        return self

    def with_seed(self, seed: Optional[int]) -> "RunConfig":
        if seed is None:
            return self
        return replace(self, optimizer=replace(self.optimizer, seed=int(seed)))

    def with_out_dir(self, out_dir: Optional[Path]) -> "RunConfig":
        return self if out_dir is None else replace(self, out_dir=Path(out_dir))

    def deployment_metadata(self) -> Dict[str, Any]:
        """Camera model, gene bounds and forbidden regions a result was produced under."""
        return {
            "camera": {"intrinsics": self.camera.intrinsics.to_dict(), "delta": self.camera.delta},
            "dof": {"cameras": self.dof.cameras, **self.dof.template.to_dict()},
            "forbidden_regions": [region.to_dict() for region in self.scene.forbidden_regions],
        }

    def settings(self) -> EvaluationSettings:
        return EvaluationSettings(
            intrinsics=self.camera.intrinsics,
            delta=self.camera.delta,
            thold=self.coverage.thold,
            fusion_method=self.coverage.fusion_method,
            fov_override=self.camera.fov_override,
        )


def load_poses(path: Path) -> List[Pose6]:
    """Poses from a YAML file holding a `cameras` list of x, y, z, alpha, beta, gamma mappings."""
    path = Path(path)
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = yaml.safe_load(f) or {}
    except yaml.YAMLError as e:
        raise ConfigError([f"{path.name}: invalid YAML: {e}"]) from e
    entries = data.get("cameras") if isinstance(data, dict) else None
    if entries is None:
        raise ConfigError([f"{path.name}: expected a top-level 'cameras' list"])
    poses, errors = [], []
    for index, entry in enumerate(entries, start=1):
        try:
            poses.append(Pose6.from_dict(entry).normalized())
        except (KeyError, TypeError, ValueError) as e:
            errors.append(f"{path.name}: camera {index}: {e}")
    if errors:
        raise ConfigError(errors)
    return poses


def dump_poses(path: Path, poses: Sequence[Pose6], extra: Optional[Dict[str, Any]] = None) -> Path:
    """Write poses as a 1-based camera list plus extra top-level keys."""
    document: Dict[str, Any] = dict(extra or {})
    document["cameras"] = [{"id": i, **pose.to_dict()} for i, pose in enumerate(poses, start=1)]
    write_yaml(path, document)
    return path


def write_yaml(path: Path, document: Dict[str, Any]) -> Path:
    """Dump a document as block-style YAML, creating parent directories."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        yaml.safe_dump(document, f, sort_keys=False, allow_unicode=True)
    return path
