"""Pairwise fused coverage strength, fused matrices and principal-camera methods."""

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Sequence, Tuple

import numpy as np

from .camera import Camera
from .coverage import CoverageDecomposition, CoverageField, Scene, coverage_field, radial_coverage_vector
from .errors import DomainError
from .geometry import DirectionalPoint, Mesh, project_onto_plane

logger = logging.getLogger(__name__)

VANISHING_FUSION = 1e-12
TIE_RTOL = 1e-12


class FusionMethod(str, Enum):
    FULL = "full"
    CSBM = "csbm"
    RABM = "rabm"

    @classmethod
    def parse(cls, value) -> "FusionMethod":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            choices = ", ".join(m.value for m in cls)
            raise DomainError(f"Unknown fusion method {value!r} (expected one of: {choices})") from None


def _fusion_vanishes(dec: CoverageDecomposition) -> bool:
    return float(np.linalg.norm(dec.cf)) <= VANISHING_FUSION * max(1.0, float(np.linalg.norm(dec.cv)))


def pairwise_fused_strength(dec_i: CoverageDecomposition, dec_j: CoverageDecomposition) -> float:
    """Fused strength with camera i first; not symmetric when strengths differ."""
    if dec_i is dec_j or (dec_i.cs_norm == dec_j.cs_norm and np.array_equal(dec_i.cf, dec_j.cf)):
        return float(dec_i.cs_norm)
    if _fusion_vanishes(dec_i) or _fusion_vanishes(dec_j):
        return float(max(dec_i.cs_norm, dec_j.cs_norm))
    u_i = dec_i.cf / np.linalg.norm(dec_i.cf)
    u_j = dec_j.cf / np.linalg.norm(dec_j.cf)
    fused = dec_i.cs_norm * u_i + project_onto_plane(dec_i.cf, dec_j.cs_norm * u_j)
    return float(np.linalg.norm(fused))


@dataclass(frozen=True, eq=False)
class FusedMatrix:
    values: np.ndarray
    piece_id: int

    @property
    def strength(self) -> float:
        return float(self.values.max()) if self.values.size else 0.0


def fused_matrix_from_decompositions(decompositions: Sequence[CoverageDecomposition], piece_id: int) -> FusedMatrix:
    """Fused matrix from precomputed per-camera decompositions."""
    n = len(decompositions)
    values = np.zeros((n, n))
    for i, dec_i in enumerate(decompositions):
        for j, dec_j in enumerate(decompositions):
            values[i, j] = pairwise_fused_strength(dec_i, dec_j)
    return FusedMatrix(values, piece_id)


def piece_decompositions(piece: DirectionalPoint, cameras: Sequence[Camera], scene: Scene):
    """Radial coverage decomposition of one piece under every camera."""
    return [radial_coverage_vector(piece, camera, scene) for camera in cameras]


def fused_matrix(piece: DirectionalPoint, cameras: Sequence[Camera], scene: Scene) -> FusedMatrix:
    """Pairwise fused strengths of every camera pair on one piece."""
    if not cameras:
        raise DomainError("A fused matrix needs at least one camera")
    return fused_matrix_from_decompositions(piece_decompositions(piece, cameras, scene), piece.id)


def fused_strength(piece: DirectionalPoint, cameras: Sequence[Camera], scene: Scene) -> float:
    """Largest entry of the piece's fused matrix."""
    return fused_matrix(piece, cameras, scene).strength


def _tied(values: np.ndarray) -> Tuple[int, ...]:
    best = float(np.max(values))
    return tuple(int(i) for i in np.flatnonzero(np.isclose(values, best, rtol=TIE_RTOL, atol=0.0)))


def csbm_principal(piece: DirectionalPoint, decompositions: Sequence[CoverageDecomposition]) -> Tuple[int, ...]:
    """Camera positions with the largest effective strength; empty when no camera covers the piece."""
    if not decompositions:
        raise DomainError("CSBM needs at least one camera")
    strengths = np.array([d.cs_norm for d in decompositions])
    if not strengths.max() > 0:
        return ()
    return _tied(strengths)


def solo_recognized_areas(field: CoverageField, areas: np.ndarray, thold: float) -> np.ndarray:
    """Area each camera recognizes on its own."""
    return np.where(field.cs_norm >= thold, areas[None, :], 0.0).sum(axis=1)


def rabm_principal(cameras: Sequence[Camera], mesh: Mesh, scene: Scene, thold: float) -> Tuple[int, ...]:
    """Cameras whose solo recognized area is largest; ties are all returned."""
    if not cameras:
        raise DomainError("RABM needs at least one camera")
    field = coverage_field(cameras, scene, mesh)
    return _tied(solo_recognized_areas(field, mesh.areas(), thold))


def auxiliary_camera(
    piece: DirectionalPoint, principal: int, decompositions: Sequence[CoverageDecomposition]
) -> int:
    """Partner maximizing the pairwise fused strength with the principal first (lowest index on ties)."""
    if not 0 <= principal < len(decompositions):
        raise DomainError(f"Principal index {principal} out of range")
    values = [pairwise_fused_strength(decompositions[principal], dec) for dec in decompositions]
    return int(np.argmax(values))


def simplified_strength(decompositions: Sequence[CoverageDecomposition], principals: Sequence[int]) -> float:
    """Best principal/auxiliary pair over the tied principal set; 0 without a principal."""
    best = 0.0
    for principal in principals:
        dec_p = decompositions[principal]
        best = max(best, max(pairwise_fused_strength(dec_p, dec) for dec in decompositions))
    return best


@dataclass(frozen=True)
class PrincipalAssignment:
    piece_id: int
    principal: Optional[int]
    auxiliary: Optional[int]
    method: FusionMethod
    strength: float


def assign_principal(
    piece: DirectionalPoint,
    decompositions: Sequence[CoverageDecomposition],
    method: FusionMethod,
    rabm_principals: Sequence[int] = (),
) -> PrincipalAssignment:
    """Principal and auxiliary camera of one piece under CSBM or a precomputed RABM set."""
    method = FusionMethod.parse(method)
    if method is FusionMethod.FULL:
        raise DomainError("Principal assignment applies to the simplified methods only")
    principals = csbm_principal(piece, decompositions) if method is FusionMethod.CSBM else tuple(rabm_principals)
    if not principals:
        return PrincipalAssignment(piece.id, None, None, method, 0.0)
    best_principal, best_aux, best = principals[0], auxiliary_camera(piece, principals[0], decompositions), -1.0
    for principal in principals:
        aux = auxiliary_camera(piece, principal, decompositions)
        value = pairwise_fused_strength(decompositions[principal], decompositions[aux])
        if value > best:
            best_principal, best_aux, best = principal, aux, value
    return PrincipalAssignment(piece.id, best_principal, best_aux, method, best)


@dataclass(frozen=True, eq=False)
class FieldFusion:
    """Per-piece fused strengths and the principal camera (-1 when none covers the piece)."""

    strengths: np.ndarray
    principals: np.ndarray
    method: FusionMethod


def pairwise_tensor(field: CoverageField) -> np.ndarray:
    """All pairwise fused strengths, shape (N, N, K), entry (i, j, k) with camera i first."""
    s = field.cs_norm
    cf = field.cf
    cf_norm = np.linalg.norm(cf, axis=2)
    cv_norm = np.linalg.norm(field.cv, axis=2)
    vanish = cf_norm <= VANISHING_FUSION * np.maximum(1.0, cv_norm)
    unit = np.where(vanish[..., None], 0.0, cf / np.where(vanish, 1.0, cf_norm)[..., None])
    terms = s[..., None] * unit  # (N, K, 3)

    # Projection of camera j's term onto the plane normal to cf_i.
    along = np.einsum("ikc,jkc->ijk", unit, terms)
    fused_vec = terms[:, None] + terms[None, :] - along[..., None] * unit[:, None]
    values = np.linalg.norm(fused_vec, axis=3)

    either_vanish = vanish[:, None, :] | vanish[None, :, :]
    values = np.where(either_vanish, np.maximum(s[:, None, :], s[None, :, :]), values)
    same = (s[:, None, :] == s[None, :, :]) & np.all(cf[:, None] == cf[None, :], axis=3)
    values = np.where(same, s[:, None, :], values)
    return values


def lowest_csbm_principal(field: CoverageField) -> np.ndarray:
    """Lowest-index camera with the largest strength per piece, -1 if uncovered."""
    s = field.cs_norm
    best = s.max(axis=0)
    tied = np.isclose(s, best[None, :], rtol=TIE_RTOL, atol=0.0) & (best[None, :] > 0)
    return np.where(tied.any(axis=0), np.argmax(tied, axis=0), -1)


def fused_strength_field(field: CoverageField, method, thold: float, areas: np.ndarray) -> FieldFusion:
    """Fused strength of every piece under the full, CSBM or RABM method."""
    method = FusionMethod.parse(method)
    n_cams, n_pieces = field.cs_norm.shape
    if n_cams == 0:
        return FieldFusion(np.zeros(n_pieces), np.full(n_pieces, -1, dtype=int), method)
    values = pairwise_tensor(field)
    s = field.cs_norm

    if method is FusionMethod.FULL:
        return FieldFusion(values.max(axis=(0, 1)), lowest_csbm_principal(field), method)

    if method is FusionMethod.CSBM:
        best = s.max(axis=0)
        tied = np.isclose(s, best[None, :], rtol=TIE_RTOL, atol=0.0) & (best[None, :] > 0)
        principals = lowest_csbm_principal(field)
    else:
        solo = solo_recognized_areas(field, np.asarray(areas, dtype=float), thold)
        rows = np.isclose(solo, solo.max(), rtol=TIE_RTOL, atol=0.0)
        tied = np.repeat(rows[:, None], n_pieces, axis=1)
        principals = np.where(s.max(axis=0) > 0, int(np.argmax(rows)), -1)

    masked = np.where(tied[:, None, :], values, -np.inf).max(axis=(0, 1))
    strengths = np.where(np.isfinite(masked), masked, 0.0)
    return FieldFusion(strengths, principals, method)
