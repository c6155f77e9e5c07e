"""Tests for STL/OBJ ingestion and the colored PLY export."""

import numpy as np
import pytest
import trimesh

from camnet_deploy.errors import MeshParseError
from camnet_deploy.geometry import refine_mesh
from camnet_deploy.mesh_io import (
    STL_HEADER,
    STL_RECORD_SIZE,
    UNCOVERED_COLOR,
    color_for_strength,
    load_scene,
    read_colored_ply,
    read_obj,
    read_stl,
    read_triangles,
    write_colored_ply,
)
from camnet_deploy.regions import BoxRegion

from conftest import plate_triangles, unit_cube_triangles


def write_ascii_stl(path, triangles):
    lines = ["solid test"]
    for tri in triangles:
        lines.append("  facet normal 0 0 0")
        lines.append("    outer loop")
        lines.extend(f"      vertex {x:.9g} {y:.9g} {z:.9g}" for x, y, z in tri)
        lines.append("    endloop")
        lines.append("  endfacet")
    lines.append("endsolid test")
    path.write_text("\n".join(lines) + "\n")
    return path


def binary_stl_bytes(triangles):
    vertices = np.asarray(triangles, dtype=float).reshape(-1, 3)
    faces = np.arange(len(vertices)).reshape(-1, 3)
    return trimesh.Trimesh(vertices=vertices, faces=faces, process=False).export(file_type="stl")


class TestStl:
    def test_ascii_cube(self, tmp_path):
        path = write_ascii_stl(tmp_path / "cube.stl", unit_cube_triangles())
        triangles = read_stl(path)
        assert triangles.shape == (12, 3, 3)
        assert np.array_equal(triangles, unit_cube_triangles())

    def test_binary_cube(self, tmp_path):
        path = tmp_path / "cube.stl"
        path.write_bytes(binary_stl_bytes(unit_cube_triangles()))
        triangles = read_stl(path)
        assert np.array_equal(triangles, unit_cube_triangles())

    def test_cube_refinement_counts(self, tmp_path):
        path = write_ascii_stl(tmp_path / "cube.stl", unit_cube_triangles())
        assert len(refine_mesh(read_stl(path), 1.0)) == 12
        assert len(refine_mesh(read_stl(path), 1.0 / 16)) == 192

    def test_binary_header_starting_with_solid(self, tmp_path):
        data = bytearray(binary_stl_bytes(unit_cube_triangles()))
        data[:5] = b"solid"
        path = tmp_path / "cube.stl"
        path.write_bytes(bytes(data))
        assert read_stl(path).shape == (12, 3, 3)

    def test_truncated_binary_reports_offset(self, tmp_path):
        data = binary_stl_bytes(unit_cube_triangles())
        path = tmp_path / "broken.stl"
        path.write_bytes(data[: STL_HEADER + 5 * STL_RECORD_SIZE + 20])
        with pytest.raises(MeshParseError) as excinfo:
            read_stl(path)
        assert excinfo.value.byte_offset == STL_HEADER + 5 * STL_RECORD_SIZE

    def test_truncated_binary_with_solid_header(self, tmp_path):
        data = bytearray(binary_stl_bytes(unit_cube_triangles()))
        data[:5] = b"solid"
        path = tmp_path / "broken.stl"
        path.write_bytes(bytes(data[: STL_HEADER + 7 * STL_RECORD_SIZE + 3]))
        with pytest.raises(MeshParseError) as excinfo:
            read_stl(path)
        assert excinfo.value.byte_offset == STL_HEADER + 7 * STL_RECORD_SIZE

    def test_trailing_bytes_ignored(self, tmp_path):
        path = tmp_path / "cube.stl"
        path.write_bytes(binary_stl_bytes(unit_cube_triangles()) + bytes(7))
        assert np.array_equal(read_stl(path), unit_cube_triangles())

    def test_ascii_loop_with_missing_vertex(self, tmp_path):
        path = tmp_path / "bad.stl"
        path.write_text("solid x\nfacet normal 0 0 1\nouter loop\nvertex 0 0 0\nvertex 1 0 0\nendloop\nendfacet\nendsolid x\n")
        with pytest.raises(MeshParseError):
            read_stl(path)


class TestObj:
    def test_triangles_and_negative_indices(self, tmp_path):
        path = tmp_path / "tri.obj"
        path.write_text("# two faces\nv 0 0 0\nv 1 0 0\nv 0 1 0\nv 1 1 0\nf 1 2 3\nf -3 -1 -2\n")
        triangles = read_obj(path)
        assert triangles.shape == (2, 3, 3)
        assert np.array_equal(triangles[1], [[1, 0, 0], [1, 1, 0], [0, 1, 0]])

    def test_texture_and_normal_references(self, tmp_path):
        path = tmp_path / "tri.obj"
        path.write_text("v 0 0 0\nv 1 0 0\nv 0 1 0\nvt 0 0\nvn 0 0 1\nf 1/1/1 2/1/1 3/1/1\n")
        assert read_obj(path).shape == (1, 3, 3)

    def test_quad_faces_listed(self, tmp_path):
        path = tmp_path / "quad.obj"
        path.write_text("v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nv 0 0 1\nf 1 2 3\nf 1 2 3 4\nf 2 3 4\nf 1 2 3 4 5\n")
        with pytest.raises(MeshParseError) as excinfo:
            read_obj(path)
        assert excinfo.value.face_indices == [2, 4]

    def test_missing_vertex_reference(self, tmp_path):
        path = tmp_path / "bad.obj"
        path.write_text("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 9\n")
        with pytest.raises(MeshParseError):
            read_obj(path)

    def test_unsupported_suffix(self, tmp_path):
        path = tmp_path / "mesh.ply"
        path.write_text("ply\n")
        with pytest.raises(MeshParseError):
            read_triangles(path)

    def test_scale_to_meters(self, tmp_path):
        path = tmp_path / "mm.obj"
        path.write_text("v 0 0 0\nv 1000 0 0\nv 0 1000 0\nf 1 2 3\n")
        assert np.allclose(read_triangles(path, scale=0.001)[0], [[0, 0, 0], [1, 0, 0], [0, 1, 0]])


class TestLoadScene:
    def test_degenerate_dropped_and_obstacles_unrefined(self, tmp_path):
        obj = tmp_path / "plate.obj"
        obj.write_text(
            "v -0.2 -0.2 0\nv 0.2 -0.2 0\nv 0.2 0.2 0\nv -0.2 0.2 0\nv 0.4 0.4 0\n"
            "f 1 2 3\nf 1 3 4\nf 1 3 5\n"
        )
        cube = write_ascii_stl(tmp_path / "cube.stl", unit_cube_triangles())
        region = BoxRegion((0, 0, 0), (1, 1, 1))
        scene = load_scene(obj, [cube], sigma=0.025, forbidden_regions=[region])
        assert len(scene.object) == 8
        assert len(scene.obstacles[0]) == 12
        assert scene.forbidden_regions == (region,)
        assert scene.inside_obstacle((0.4, 0.5, 0.3))


class TestColoredPly:
    def test_ramp_endpoints(self):
        assert color_for_strength(0.0, False, 1.0) == UNCOVERED_COLOR
        assert color_for_strength(2.0, True, 1.0) == (200, 30, 30)
        assert color_for_strength(5.0, True, 1.0) == (200, 30, 30)
        assert color_for_strength(0.9, False, 1.0) != color_for_strength(0.9, True, 1.0)

    def test_ramp_darkens_with_strength(self):
        weak = color_for_strength(1.0, True, 1.0)
        strong = color_for_strength(1.8, True, 1.0)
        assert sum(strong) < sum(weak)

    def test_round_trip(self, tmp_path):
        mesh = refine_mesh(plate_triangles(0.2), 0.025)
        strengths = np.linspace(0.0, 2.0, len(mesh))
        recognized = strengths >= 1.0
        path = write_colored_ply(tmp_path / "out" / "coverage.ply", mesh, strengths, recognized, 1.0)
        count, colors = read_colored_ply(path)
        assert count == len(mesh)
        expected = [color_for_strength(s, r, 1.0) for s, r in zip(strengths, recognized)]
        assert [tuple(int(c) for c in row) for row in colors] == expected
