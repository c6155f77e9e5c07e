"""Command line interface for evaluating and optimizing camera deployments."""

import logging
import os
import sys
from contextlib import contextmanager
from dataclasses import asdict
from pathlib import Path
from typing import List, Optional

import click
import numpy as np
import pandas as pd
from dotenv import load_dotenv
from rich.console import Console
from rich.progress import BarColumn, Progress, SpinnerColumn, TextColumn
from rich.table import Table

from . import __version__
from .camera import build_frustum
from .config import RunConfig, dump_poses, load_poses, write_yaml
from .coverage import Scene
from .errors import ConfigError, DomainError, InfeasibleProblemError, MeshParseError
from .mesh_io import load_scene, write_colored_ply
from .objective import CoverageReport, report
from .optimizer import heuristic_place, iga_optimize, sga_optimize

load_dotenv()

console = Console()
logger = logging.getLogger(__name__)

EXIT_CONFIG = 2
EXIT_INFEASIBLE = 3
LOG_FILE_ENV = "CAMNET_LOG_FILE"


def setup_logging(verbose: bool = False):
    """Configure root logging once for a CLI run."""
    level = logging.DEBUG if verbose else logging.INFO
    handlers: List[logging.Handler] = [logging.StreamHandler()]
    log_file = os.getenv(LOG_FILE_ENV)
    if log_file:
        handlers.append(logging.FileHandler(log_file))
    logging.basicConfig(
        level=level,
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
        handlers=handlers,
    )


@contextmanager
def exit_on_error():
    """Map library errors to exit codes."""
    try:
        yield
    except (ConfigError, MeshParseError, DomainError) as e:
        console.print(f"❌ {e}", style="red")
        sys.exit(EXIT_CONFIG)
    except InfeasibleProblemError as e:
        console.print(f"❌ Infeasible problem: {e}", style="red")
        sys.exit(EXIT_INFEASIBLE)


def _load(config_path: Path, seed: Optional[int] = None, out_dir: Optional[Path] = None):
    config = RunConfig.load(config_path).with_seed(seed).with_out_dir(out_dir)
    with Progress(SpinnerColumn(), TextColumn("[progress.description]{task.description}"), console=console) as progress:
        task = progress.add_task(f"Loading {config.scene.object.name}...", total=None)
        scene = load_scene(
            config.scene.object,
            config.scene.obstacles,
            config.coverage.sigma,
            config.scene.forbidden_regions,
            config.scene.scale,
        )
        progress.update(task, description=f"✅ {len(scene.object)} pieces loaded")
    return config, scene


def _report_document(result: CoverageReport) -> dict:
    document = result.summary()
    document["strengths"] = [float(s) for s in result.strengths]
    return document


def _write_outputs(out_dir: Path, scene: Scene, result: CoverageReport) -> None:
    write_yaml(out_dir / "report.yaml", _report_document(result))
    write_colored_ply(out_dir / "coverage.ply", scene.object, result.strengths, result.recognized, result.thold)


def _print_report(result: CoverageReport, title: str) -> None:
    table = Table(title=title)
    table.add_column("Metric", style="cyan")
    table.add_column("Value", style="magenta")
    for key, value in result.summary().items():
        table.add_row(key, f"{value:.6g}" if isinstance(value, float) else str(value))
    console.print(table)


@click.group()
@click.version_option(version=__version__)
@click.option("--verbose", "-v", is_flag=True, help="Enable debug logging")
@click.pass_context
def cli(ctx, verbose):
    """Camera network deployment: coverage evaluation and placement optimization."""
    ctx.ensure_object(dict)
    ctx.obj["verbose"] = verbose
    setup_logging(verbose)


@cli.command()
@click.option("--config", "config_path", required=True, type=click.Path(exists=True, path_type=Path))
@click.option("--poses", "poses_path", required=True, type=click.Path(exists=True, path_type=Path))
@click.option("--out-dir", type=click.Path(path_type=Path), help="Override output.out_dir")
def evaluate(config_path: Path, poses_path: Path, out_dir: Optional[Path]):
    """Evaluate a fixed deployment and export its coverage."""
    with exit_on_error():
        config, scene = _load(config_path, out_dir=out_dir)
        poses = load_poses(poses_path)
        if len(poses) != config.dof.cameras:
            raise ConfigError([f"{poses_path.name} lists {len(poses)} cameras, config expects {config.dof.cameras}"])
        settings = config.settings()
        result = report(settings.build_cameras(poses), scene.object, scene, settings)

        _write_outputs(config.out_dir, scene, result)
        pd.DataFrame(
            {
                "piece": [p.id for p in scene.object.pieces],
                "area": scene.object.areas(),
                "strength": result.strengths,
                "recognized": result.recognized.astype(int),
                "principal_camera": np.where(result.principal >= 0, result.principal + 1, 0),
            }
        ).to_csv(config.out_dir / "strengths.csv", index=False)

        _print_report(result, "Coverage Report")
        console.print(f"✅ Outputs written to {config.out_dir}")


@cli.command()
@click.option("--config", "config_path", required=True, type=click.Path(exists=True, path_type=Path))
@click.option("--seed", type=int, help="Override optimizer.seed")
@click.option("--out-dir", type=click.Path(path_type=Path), help="Override output.out_dir")
@click.option(
    "--algorithm",
    type=click.Choice(["iga", "sga"]),
    default="iga",
    show_default=True,
    help="Improved GA or the standard GA baseline",
)
def optimize(config_path: Path, seed: Optional[int], out_dir: Optional[Path], algorithm: str):
    """Search camera poses maximizing the recognized area."""
    with exit_on_error():
        config, scene = _load(config_path, seed, out_dir)
        if config.dof.cameras < 1:
            raise ConfigError(["dof.cameras must be at least 1 to optimize"])
        settings = config.settings()
        params = config.optimizer

        with Progress(
            SpinnerColumn(),
            TextColumn("[progress.description]{task.description}"),
            BarColumn(),
            TextColumn("[progress.percentage]{task.percentage:>3.0f}%"),
            console=console,
        ) as progress:
            task = progress.add_task(f"Running {algorithm.upper()}...", total=params.iterations or 1)

            def advance(iteration: int, best: float):
                progress.update(task, completed=iteration, description=f"{algorithm.upper()} best {best:.6f} m²")

            search = iga_optimize if algorithm == "iga" else sga_optimize
            result = search(params, config.dof.spec(), scene.object, scene, settings, progress=advance)

        out = config.out_dir
        dump_poses(
            out / "poses.yaml",
            result.poses,
            {
                "algorithm": algorithm,
                "seed": params.seed,
                "best_fitness": result.best_fitness,
                "recognized_ratio": result.recognized_ratio,
                "deployment": config.deployment_metadata(),
            },
        )
        pd.DataFrame([asdict(row) for row in result.trace]).to_csv(out / "trace.csv", index=False)
        final = report(settings.build_cameras(result.poses), scene.object, scene, settings)
        _write_outputs(out, scene, final)

        _print_report(final, f"{algorithm.upper()} Deployment")
        console.print(f"✅ Outputs written to {out}")


@cli.command()
@click.option("--config", "config_path", required=True, type=click.Path(exists=True, path_type=Path))
@click.option("--max-cameras", type=int, required=True, help="Largest camera count to try")
@click.option("--seed", type=int, help="Override optimizer.seed")
@click.option("--out-dir", type=click.Path(path_type=Path), help="Override output.out_dir")
def heuristic(config_path: Path, max_cameras: int, seed: Optional[int], out_dir: Optional[Path]):
    """Place cameras one at a time and record the recognized-ratio curve."""
    with exit_on_error():
        if max_cameras < 1:
            raise ConfigError([f"--max-cameras must be at least 1, got {max_cameras}"])
        config, scene = _load(config_path, seed, out_dir)
        settings = config.settings()

        with Progress(
            SpinnerColumn(),
            TextColumn("[progress.description]{task.description}"),
            BarColumn(),
            console=console,
        ) as progress:
            task = progress.add_task("Placing cameras...", total=max_cameras)
            steps = heuristic_place(
                max_cameras,
                config.optimizer,
                config.dof.spec(1),
                scene.object,
                scene,
                settings,
                progress=lambda count: progress.update(task, completed=count),
            )

        out = config.out_dir
        out.mkdir(parents=True, exist_ok=True)
        pd.DataFrame(
            {
                "camera_count": [s.camera_count for s in steps],
                "recognized_ratio": [s.recognized_ratio for s in steps],
                "fitness": [s.fitness for s in steps],
            }
        ).to_csv(out / "heuristic.csv", index=False)
        write_yaml(
            out / "heuristic_poses.yaml",
            {
                "seed": config.optimizer.seed,
                "deployment": config.deployment_metadata(),
                "steps": [
                    {
                        "camera_count": s.camera_count,
                        "recognized_ratio": s.recognized_ratio,
                        "cameras": [{"id": i, **p.to_dict()} for i, p in enumerate(s.poses, start=1)],
                    }
                    for s in steps
                ],
            },
        )

        table = Table(title="Recognition Ratio by Camera Count")
        table.add_column("Cameras", style="cyan")
        table.add_column("Recognized ratio", style="magenta")
        for s in steps:
            table.add_row(str(s.camera_count), f"{100 * s.recognized_ratio:.2f}%")
        console.print(table)
        console.print(f"✅ Outputs written to {out}")


@cli.command()
@click.option("--config", "config_path", required=True, type=click.Path(exists=True, path_type=Path))
def info(config_path: Path):
    """Show the scene and camera model a configuration describes."""
    with exit_on_error():
        config, scene = _load(config_path)
        frustum = build_frustum(config.camera.intrinsics, config.camera.delta, config.camera.fov_override)
        table = Table(title="Scene Summary")
        table.add_column("Item", style="cyan")
        table.add_column("Value", style="magenta")
        table.add_row("Object", str(config.scene.object))
        table.add_row("Pieces", str(len(scene.object)))
        table.add_row("Total area (m²)", f"{scene.object.total_area:.6f}")
        table.add_row("Closed surface", str(scene.object.is_closed))
        table.add_row("Obstacles", str(len(scene.obstacles)))
        table.add_row("Forbidden regions", str(len(scene.forbidden_regions)))
        table.add_row("FOV l/r/t/b (rad)", ", ".join(f"{a:.5f}" for a in frustum.angles))
        table.add_row("Depth of field (mm)", f"{frustum.d_n:.2f} – {frustum.d_f:.2f}")
        table.add_row("Fusion method", config.coverage.fusion_method.value)
        table.add_row("Chromosome length", str(config.dof.spec().length))
        console.print(table)


if __name__ == "__main__":
    cli()
