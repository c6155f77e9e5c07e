"""End-to-end tests for the command line interface."""

import copy

import pandas as pd
import pytest
import yaml
from click.testing import CliRunner

from camnet_deploy.cli import cli

from test_config import BASE_CONFIG, write_config


@pytest.fixture
def runner():
    return CliRunner()


def _config(tmp_path, **sections):
    data = copy.deepcopy(BASE_CONFIG)
    for name, values in sections.items():
        data[name].update(values)
    return write_config(tmp_path, data)


class TestEvaluate:
    def test_zero_cameras(self, runner, tmp_path):
        config = _config(tmp_path, dof={"cameras": 0})
        poses = tmp_path / "poses.yaml"
        poses.write_text("cameras: []\n")
        result = runner.invoke(cli, ["evaluate", "--config", str(config), "--poses", str(poses)])
        assert result.exit_code == 0, result.output
        out = tmp_path / "results"
        report = yaml.safe_load((out / "report.yaml").read_text())
        assert report["recognized_ratio"] == 0.0
        assert report["camera_count"] == 0
        assert (out / "coverage.ply").exists()
        strengths = pd.read_csv(out / "strengths.csv")
        assert len(strengths) == 8
        assert (strengths["principal_camera"] == 0).all()

    def test_overhead_camera(self, runner, tmp_path):
        config = _config(tmp_path, dof={"cameras": 1})
        poses = tmp_path / "poses.yaml"
        poses.write_text(yaml.safe_dump({"cameras": [{"x": 0, "y": 0, "z": 0.6, "alpha": 0, "beta": 1.5707963}]}))
        result = runner.invoke(
            cli, ["evaluate", "--config", str(config), "--poses", str(poses), "--out-dir", str(tmp_path / "eval")]
        )
        assert result.exit_code == 0, result.output
        report = yaml.safe_load((tmp_path / "eval" / "report.yaml").read_text())
        assert report["recognized_ratio"] == 1.0
        assert len(report["strengths"]) == 8
        strengths = pd.read_csv(tmp_path / "eval" / "strengths.csv")
        assert (strengths["principal_camera"] == 1).all()

    def test_pose_count_mismatch_is_config_error(self, runner, tmp_path):
        config = _config(tmp_path)
        poses = tmp_path / "poses.yaml"
        poses.write_text("cameras: []\n")
        result = runner.invoke(cli, ["evaluate", "--config", str(config), "--poses", str(poses)])
        assert result.exit_code == 2


class TestOptimize:
    def test_zero_iterations(self, runner, tmp_path):
        config = _config(tmp_path)
        result = runner.invoke(cli, ["optimize", "--config", str(config)])
        assert result.exit_code == 0, result.output
        out = tmp_path / "results"
        trace = pd.read_csv(out / "trace.csv")
        assert len(trace) == 1
        assert list(trace.columns) == ["iteration", "best_fitness", "recognized_ratio"]
        poses = yaml.safe_load((out / "poses.yaml").read_text())
        assert poses["seed"] == 7
        assert poses["algorithm"] == "iga"
        assert len(poses["cameras"]) == 2
        assert poses["deployment"]["dof"]["fixed"] == {"z": 0.8}
        assert poses["deployment"]["camera"]["intrinsics"]["o_u"] == 800.0
        assert (out / "report.yaml").exists()
        assert (out / "coverage.ply").exists()

    def test_reruns_are_byte_identical(self, runner, tmp_path):
        config = _config(tmp_path, optimizer={"iterations": 3, "upsilon_max": 3})
        for name in ("first", "second"):
            result = runner.invoke(
                cli, ["optimize", "--config", str(config), "--seed", "11", "--out-dir", str(tmp_path / name)]
            )
            assert result.exit_code == 0, result.output
        for artifact in ("poses.yaml", "trace.csv", "report.yaml"):
            assert (tmp_path / "first" / artifact).read_bytes() == (tmp_path / "second" / artifact).read_bytes()

    def test_standard_ga(self, runner, tmp_path):
        config = _config(tmp_path, optimizer={"iterations": 2})
        result = runner.invoke(cli, ["optimize", "--config", str(config), "--algorithm", "sga"])
        assert result.exit_code == 0, result.output
        assert len(pd.read_csv(tmp_path / "results" / "trace.csv")) == 3

    def test_missing_seed_exits_with_config_error(self, runner, tmp_path):
        data = copy.deepcopy(BASE_CONFIG)
        del data["optimizer"]["seed"]
        result = runner.invoke(cli, ["optimize", "--config", str(write_config(tmp_path, data))])
        assert result.exit_code == 2
        assert "seed" in result.output

    def test_infeasible_exits_with_code_three(self, runner, tmp_path):
        region = {"type": "box", "lower": [-1, -1, 0], "upper": [1, 1, 1]}
        config = _config(tmp_path, scene={"forbidden_regions": [region]}, optimizer={"init_attempts": 2})
        result = runner.invoke(cli, ["optimize", "--config", str(config)])
        assert result.exit_code == 3


class TestHeuristicAndInfo:
    def test_heuristic_curve(self, runner, tmp_path):
        config = _config(tmp_path, optimizer={"iterations": 2})
        result = runner.invoke(cli, ["heuristic", "--config", str(config), "--max-cameras", "2"])
        assert result.exit_code == 0, result.output
        curve = pd.read_csv(tmp_path / "results" / "heuristic.csv")
        assert list(curve["camera_count"]) == [1, 2]
        steps = yaml.safe_load((tmp_path / "results" / "heuristic_poses.yaml").read_text())["steps"]
        assert [len(s["cameras"]) for s in steps] == [1, 2]

    def test_heuristic_needs_positive_count(self, runner, tmp_path):
        result = runner.invoke(cli, ["heuristic", "--config", str(_config(tmp_path)), "--max-cameras", "0"])
        assert result.exit_code == 2

    def test_info(self, runner, tmp_path):
        result = runner.invoke(cli, ["info", "--config", str(_config(tmp_path))])
        assert result.exit_code == 0, result.output
        assert "Pieces" in result.output

    def test_version(self, runner):
        result = runner.invoke(cli, ["--version"])
        assert result.exit_code == 0
        assert "0.1.0" in result.output
