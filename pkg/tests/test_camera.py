"""Tests for the pinhole camera model."""

import logging
import math
from dataclasses import replace

import numpy as np
import pytest

from camnet_deploy.camera import (
    Camera,
    CameraIntrinsics,
    build_frustum,
    depth_of_field,
    derive_fov_angles,
    in_fov,
    in_fov_batch,
    is_focused,
    resolution_criterion,
)
from camnet_deploy.errors import DomainError
from camnet_deploy.geometry import Pose6, look_at_pose


class TestIntrinsics:
    def test_reference_intrinsics_valid(self, intrinsics):
        ok, errors = intrinsics.validate()
        assert ok, f"Unexpected errors: {errors}"

    def test_invalid_fields_collected(self, intrinsics):
        bad = replace(intrinsics, d_s=4.0, o_u=0.0, s_v=-1.0)
        ok, errors = bad.validate()
        assert not ok
        assert len(errors) == 4, f"Expected four errors, got {errors}"

    def test_from_dict_accepts_principal_pair(self):
        intr = CameraIntrinsics.from_dict(
            {"f": 5, "s_u": 0.0053, "s_v": 0.0053, "o": [800, 600], "w": 1600, "h": 1200, "d_a": 5, "d_s": 1200}
        )
        assert (intr.o_u, intr.o_v) == (800.0, 600.0)


class TestFieldOfView:
    def test_reference_angles(self, intrinsics):
        phi_l, phi_r, phi_t, phi_b = derive_fov_angles(intrinsics)
        assert phi_r == pytest.approx(0.70343, abs=1e-5)
        assert phi_t == pytest.approx(0.56673, abs=1e-5)
        assert phi_l == phi_r
        assert phi_t == phi_b

    def test_wider_sensor_never_narrows_right_angle(self, intrinsics):
        base = derive_fov_angles(intrinsics)[1]
        wider = derive_fov_angles(replace(intrinsics, w=2000.0))[1]
        assert wider >= base

    def test_optical_axis_inside(self, intrinsics):
        frustum = build_frustum(intrinsics, 5.0)
        assert in_fov((0.0, 0.0, 1000.0), frustum)

    def test_behind_and_at_center_outside(self, intrinsics):
        frustum = build_frustum(intrinsics, 5.0)
        assert not in_fov((0.0, 0.0, -1.0), frustum)
        assert not in_fov((0.0, 0.0, 0.0), frustum)

    def test_boundary_inclusive(self, intrinsics):
        frustum = build_frustum(intrinsics, 5.0)
        assert in_fov((frustum.tan_r, 0.0, 1.0), frustum)
        assert in_fov((-frustum.tan_l, frustum.tan_b, 1.0), frustum)
        assert not in_fov((frustum.tan_r * 1.000001, 0.0, 1.0), frustum)

    def test_scaling_preserves_membership(self, intrinsics):
        frustum = build_frustum(intrinsics, 5.0)
        rng = np.random.default_rng(2)
        for _ in range(500):
            point = rng.uniform(-1000, 1000, size=3)
            scale = rng.uniform(0.01, 100)
            if in_fov(point, frustum):
                assert in_fov(point * scale, frustum)

    def test_batch_matches_scalar(self, intrinsics):
        frustum = build_frustum(intrinsics, 5.0)
        points = np.random.default_rng(4).uniform(-1000, 1000, size=(1000, 3))
        expected = [in_fov(p, frustum) for p in points]
        assert list(in_fov_batch(points, frustum)) == expected

    def test_override_warns_and_wins(self, intrinsics, caplog):
        override = (0.5, 0.5, 0.4, 0.4)
        with caplog.at_level(logging.WARNING):
            frustum = build_frustum(intrinsics, 5.0, override)
        assert frustum.angles == override
        assert "FOV override" in caplog.text

    def test_consistent_override_is_silent(self, intrinsics, caplog):
        with caplog.at_level(logging.WARNING):
            build_frustum(intrinsics, 5.0, derive_fov_angles(intrinsics))
        assert caplog.text == ""


class TestDepthOfField:
    def test_reference_values(self, intrinsics):
        d_n, d_f = depth_of_field(intrinsics, 5.0)
        assert d_n == pytest.approx(529.40, abs=0.01)
        assert d_n == pytest.approx(30000 / (25 + 5 * 0.0053 * 1195))
        assert d_f == math.inf

    def test_small_blur_brackets_focus_distance(self, intrinsics):
        d_n, d_f = depth_of_field(intrinsics, 1e-6)
        assert d_n < intrinsics.d_s < d_f
        assert d_n == pytest.approx(intrinsics.d_s, rel=1e-6)
        assert d_f == pytest.approx(intrinsics.d_s, rel=1e-6)

    def test_near_below_focus_below_far(self, intrinsics):
        for delta in (0.1, 1.0, 3.0, 5.0, 20.0):
            d_n, d_f = depth_of_field(intrinsics, delta)
            assert d_n < intrinsics.d_s < d_f

    def test_nonpositive_delta_rejected(self, intrinsics):
        with pytest.raises(DomainError):
            depth_of_field(intrinsics, 0.0)

    def test_focus_window(self, intrinsics):
        frustum = build_frustum(intrinsics, 5.0)
        assert is_focused(intrinsics.d_s, frustum)
        assert not is_focused(frustum.d_n - 1e-6, frustum)
        assert is_focused(600.0, frustum)
        assert is_focused(frustum.d_n, frustum)


class TestResolution:
    def test_reference_value(self, intrinsics):
        assert resolution_criterion(1200.0, intrinsics) == pytest.approx(0.78945, abs=1e-5)

    def test_inverse_depth(self, intrinsics):
        base = resolution_criterion(1200.0, intrinsics)
        assert resolution_criterion(2400.0, intrinsics) == pytest.approx(base / 2, rel=1e-12)
        assert resolution_criterion(600.0, intrinsics) == pytest.approx(base * 2, rel=1e-12)

    def test_product_with_depth_constant(self, intrinsics):
        reference = resolution_criterion(1.0, intrinsics)
        for z in np.linspace(10, 5000, 50):
            assert resolution_criterion(z, intrinsics) * z == pytest.approx(reference, rel=1e-12)

    def test_nonpositive_depth_rejected(self, intrinsics):
        with pytest.raises(DomainError):
            resolution_criterion(0.0, intrinsics)


class TestCamera:
    def test_local_coordinates_in_millimeters(self, intrinsics):
        camera = Camera.from_pose(intrinsics, look_at_pose((0, 0, 1.2), (0, 0, 0)), 5.0)
        local = camera.to_local_mm((0.0, 0.0, 0.0))
        assert local[2] == pytest.approx(1200.0)
        assert np.allclose(local[:2], 0.0, atol=1e-9)

    def test_optical_axis(self, intrinsics):
        pose = Pose6((0.0, 0.0, 0.0), 0.4, 0.3, 0.2)
        camera = Camera.from_pose(intrinsics, pose, 5.0)
        expected = (-math.sin(0.4) * math.cos(0.3), math.cos(0.4) * math.cos(0.3), -math.sin(0.3))
        assert np.allclose(camera.optical_axis(), expected, atol=1e-12)

    def test_frustum_matches_recomputation(self, intrinsics):
        camera = Camera.from_pose(intrinsics, Pose6((0, 0, 1)), 5.0)
        again = build_frustum(intrinsics, 5.0)
        assert camera.frustum.angles == pytest.approx(again.angles, abs=1e-12)
        assert camera.frustum.d_n == pytest.approx(again.d_n, abs=1e-12)

    def test_invalid_intrinsics_rejected(self, intrinsics):
        with pytest.raises(DomainError):
            Camera.from_pose(replace(intrinsics, d_s=1.0), Pose6((0, 0, 1)), 5.0)
