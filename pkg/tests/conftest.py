"""Shared fixtures: the reference camera model and small constructed scenes."""

import sys
from pathlib import Path

import numpy as np
import pytest

# Add the repository root to the path to import the package
sys.path.insert(0, str(Path(__file__).parent.parent))

from camnet_deploy.camera import Camera, CameraIntrinsics
from camnet_deploy.coverage import Scene
from camnet_deploy.geometry import Mesh, Pose6, look_at_pose, refine_mesh
from camnet_deploy.objective import EvaluationSettings
from camnet_deploy.optimizer import CameraDof

DELTA = 5.0


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: full-budget optimizer runs (deselect with -m \"not slow\")")


def plate_triangles(half_size: float, z: float = 0.0) -> np.ndarray:
    """Square plate in the plane z, front face toward +z."""
    h = half_size
    return np.array(
        [
            [[-h, -h, z], [h, -h, z], [h, h, z]],
            [[-h, -h, z], [h, h, z], [-h, h, z]],
        ]
    )


@pytest.fixture
def intrinsics():
    """Simulation camera: 5 mm lens, 1600×1200 sensor with 5.3 µm pixels."""
    return CameraIntrinsics(f=5.0, s_u=0.0053, s_v=0.0053, o_u=800.0, o_v=600.0, w=1600.0, h=1200.0, d_a=5.0, d_s=1200.0)


@pytest.fixture
def settings(intrinsics):
    return EvaluationSettings(intrinsics=intrinsics, delta=DELTA, thold=1.0)


@pytest.fixture
def make_camera(intrinsics):
    def _make(position, target=None, camera_id=1, pose=None):
        if pose is None:
            pose = look_at_pose(position, target)
        return Camera.from_pose(intrinsics, pose, DELTA, camera_id)

    return _make


@pytest.fixture
def plate_scene():
    """0.4 m plate at z = 0 refined into 8 pieces."""
    return Scene(refine_mesh(plate_triangles(0.2), sigma=0.025))


@pytest.fixture
def make_plate_scene():
    def _make(half_size=0.2, sigma=0.025, forbidden_regions=(), obstacles=()):
        return Scene(refine_mesh(plate_triangles(half_size), sigma), tuple(obstacles), tuple(forbidden_regions))

    return _make


@pytest.fixture
def single_piece_scene():
    """One triangle at the origin facing +z, centroid (0, 0, 0)."""
    tri = np.array([[[-0.03, -0.03, 0.0], [0.06, -0.03, 0.0], [-0.03, 0.06, 0.0]]])
    return Scene(refine_mesh(tri, sigma=1.0))


@pytest.fixture
def overhead_dof():
    """Camera hovering near the plate center at a fixed 0.6 m, looking almost straight down."""
    return CameraDof(
        lower=(-0.05, -0.05, 0.6, -np.pi, 1.5, -0.05),
        upper=(0.05, 0.05, 0.6, np.pi, np.pi / 2, 0.05),
        fixed={2: 0.6},
    )


@pytest.fixture
def roaming_dof():
    """Camera at a fixed 0.8 m height free to move and tilt above a plate."""
    return CameraDof(
        lower=(-0.6, -0.6, 0.8, -np.pi, 0.6, -0.3),
        upper=(0.6, 0.6, 0.8, np.pi, np.pi / 2, 0.3),
        fixed={2: 0.8},
    )


@pytest.fixture
def downward_pose():
    return Pose6((0.0, 0.0, 0.6), 0.0, np.pi / 2, 0.0)


def unit_cube_triangles() -> np.ndarray:
    """Closed unit cube with outward-facing triangles."""
    v = np.array(
        [[0, 0, 0], [1, 0, 0], [1, 1, 0], [0, 1, 0], [0, 0, 1], [1, 0, 1], [1, 1, 1], [0, 1, 1]], dtype=float
    )
    faces = [
        (0, 2, 1), (0, 3, 2),  # bottom
        (4, 5, 6), (4, 6, 7),  # top
        (0, 1, 5), (0, 5, 4),  # front
        (2, 3, 7), (2, 7, 6),  # back
        (1, 2, 6), (1, 6, 5),  # right
        (3, 0, 4), (3, 4, 7),  # left
    ]
    return v[np.array(faces)]


@pytest.fixture
def cube_triangles():
    return unit_cube_triangles()


def build_mesh(triangles, sigma=1.0) -> Mesh:
    return refine_mesh(triangles, sigma)
