"""Exception hierarchy shared by the library and the CLI."""

from pathlib import Path
from typing import List, Optional, Sequence, Union


class CamnetError(Exception):
    """Base class for every error raised by camnet_deploy."""


class DomainError(CamnetError, ValueError):
    """A precondition of a pure operation was violated."""


class DegenerateTriangleError(DomainError):
    """A raw triangle has (near) zero area."""

    def __init__(self, index: int, area: float):
        self.index = index
        self.area = area
        super().__init__(f"Triangle {index} is degenerate (area {area:.3e} m²)")


class GeneBoundsError(DomainError):
    """A pose component falls outside its gene bounds."""

    def __init__(self, gene_index: int, value: float, lower: float, upper: float):
        self.gene_index = gene_index
        self.value = value
        super().__init__(
            f"Gene {gene_index} value {value!r} outside bounds [{lower!r}, {upper!r}]"
        )


class MeshParseError(CamnetError):
    """A mesh file could not be parsed."""

    def __init__(
        self,
        path: Union[str, Path],
        message: str,
        byte_offset: Optional[int] = None,
        face_indices: Sequence[int] = (),
    ):
        self.path = Path(path)
        self.byte_offset = byte_offset
        self.face_indices = list(face_indices)
        location = f" at byte {byte_offset}" if byte_offset is not None else ""
        super().__init__(f"{self.path.name}{location}: {message}")


class ConfigError(CamnetError):
    """The run configuration failed validation."""

    def __init__(self, errors: List[str]):
        self.errors = list(errors)
        super().__init__("Invalid configuration:\n  - " + "\n  - ".join(self.errors))


class InfeasibleProblemError(CamnetError):
    """No chromosome with nonzero fitness could be initialized."""
