"""Camera placement search: improved GA, standard GA baseline and greedy camera-count heuristic.

Random draws are consumed in a fixed order so runs are reproducible from
(seed, parameters, scene): initialization samples the whole population gene by
gene; each iteration then draws, per chromosome in population order, the
fragment length, the fragment start, L mutation uniforms and L resample
values. Fitness evaluation never touches the generator, so it may run in a
thread pool.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Any, Callable, Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from .camera import Camera, build_frustum
from .coverage import Scene
from .errors import DomainError, GeneBoundsError, InfeasibleProblemError
from .geometry import Mesh, Pose6
from .objective import EvaluationSettings, fuse_mesh, recognized_area

logger = logging.getLogger(__name__)

GENE_NAMES = ("x", "y", "z", "alpha", "beta", "gamma")
FIXED_TOLERANCE = 1e-12

ProgressCallback = Callable[[int, float], None]


@dataclass(frozen=True)
class CameraDof:
    """Per-camera gene bounds in (x, y, z, alpha, beta, gamma) order; fixed genes are excluded from the chromosome."""

    lower: Tuple[float, ...]
    upper: Tuple[float, ...]
    fixed: Mapping[int, float] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "lower", tuple(float(v) for v in self.lower))
        object.__setattr__(self, "upper", tuple(float(v) for v in self.upper))
        object.__setattr__(self, "fixed", {int(k): float(v) for k, v in dict(self.fixed).items()})

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "CameraDof":
        fixed = {}
        for name, value in (data.get("fixed") or {}).items():
            if name not in GENE_NAMES:
                raise DomainError(f"Unknown gene {name!r} in dof.fixed (expected one of {', '.join(GENE_NAMES)})")
            fixed[GENE_NAMES.index(name)] = float(value)
        lower, upper = data.get("lower") or {}, data.get("upper") or {}
        return cls(
            tuple(float(lower.get(name, fixed.get(i, 0.0))) for i, name in enumerate(GENE_NAMES)),
            tuple(float(upper.get(name, fixed.get(i, 0.0))) for i, name in enumerate(GENE_NAMES)),
            fixed,
        )

    def to_dict(self) -> Dict[str, Any]:
        return {
            "lower": dict(zip(GENE_NAMES, self.lower)),
            "upper": dict(zip(GENE_NAMES, self.upper)),
            "fixed": {GENE_NAMES[k]: v for k, v in sorted(self.fixed.items())},
        }

    @property
    def active_genes(self) -> List[int]:
        return [g for g in range(6) if g not in self.fixed]

    def validate(self) -> Tuple[bool, List[str]]:
        errors = []
        if len(self.lower) != 6 or len(self.upper) != 6:
            return False, ["dof bounds need six genes (x, y, z, alpha, beta, gamma)"]
        for g in self.active_genes:
            lo, hi = self.lower[g], self.upper[g]
            if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
                errors.append(f"dof.{GENE_NAMES[g]}: lower {lo} must be below upper {hi}")
        for g, limit in ((3, math.pi), (4, math.pi / 2), (5, math.pi / 2)):
            if g in self.fixed:
                continue
            if self.lower[g] < -limit or self.upper[g] > limit:
                errors.append(f"dof.{GENE_NAMES[g]} bounds must stay within [-{limit:.6f}, {limit:.6f}]")
        if not self.active_genes:
            errors.append("dof leaves no free gene")
        return len(errors) == 0, errors


@dataclass(frozen=True)
class DofSpec:
    cameras: Tuple[CameraDof, ...]

    def __post_init__(self):
        object.__setattr__(self, "cameras", tuple(self.cameras))

    @classmethod
    def uniform(cls, n_cameras: int, template: CameraDof) -> "DofSpec":
        return cls(tuple(template for _ in range(n_cameras)))

    @property
    def n_cameras(self) -> int:
        return len(self.cameras)

    @property
    def slots(self) -> List[Tuple[int, int]]:
        """(camera, gene) pairs in chromosome order."""
        return [(c, g) for c, dof in enumerate(self.cameras) for g in dof.active_genes]

    @property
    def length(self) -> int:
        return len(self.slots)

    @property
    def lower_bounds(self) -> np.ndarray:
        return np.array([self.cameras[c].lower[g] for c, g in self.slots])

    @property
    def upper_bounds(self) -> np.ndarray:
        return np.array([self.cameras[c].upper[g] for c, g in self.slots])

    def validate(self) -> Tuple[bool, List[str]]:
        errors = []
        if not self.cameras:
            errors.append("dof needs at least one camera")
        for index, dof in enumerate(self.cameras):
            ok, camera_errors = dof.validate()
            errors.extend(f"camera {index + 1}: {e}" for e in camera_errors)
        return len(errors) == 0, errors


@dataclass(eq=False)
class Chromosome:
    genes: np.ndarray
    fitness: Optional[float] = None

    def copy(self) -> "Chromosome":
        return Chromosome(self.genes.copy(), self.fitness)


def encode(poses: Sequence[Pose6], dof: DofSpec) -> Chromosome:
    """Active genes of every pose, in slot order."""
    if len(poses) != dof.n_cameras:
        raise DomainError(f"Expected {dof.n_cameras} poses, got {len(poses)}")
    genes = []
    for c, (pose, cam_dof) in enumerate(zip(poses, dof.cameras)):
        values = pose.as_genes()
        # Fixed genes have no chromosome slot; report their position in the 6-per-camera layout.
        for g, fixed_value in cam_dof.fixed.items():
            if abs(values[g] - fixed_value) > FIXED_TOLERANCE:
                raise GeneBoundsError(6 * c + g, values[g], fixed_value, fixed_value)
        for g in cam_dof.active_genes:
            if not cam_dof.lower[g] <= values[g] <= cam_dof.upper[g]:
                raise GeneBoundsError(len(genes), values[g], cam_dof.lower[g], cam_dof.upper[g])
            genes.append(values[g])
    return Chromosome(np.array(genes, dtype=float))


def decode(ch: Chromosome, dof: DofSpec) -> List[Pose6]:
    """Poses with fixed genes filled back in."""
    genes = np.asarray(ch.genes, dtype=float)
    if genes.shape != (dof.length,):
        raise DomainError(f"Chromosome has {genes.size} genes, dof expects {dof.length}")
    poses, cursor = [], 0
    for cam_dof in dof.cameras:
        values = [0.0] * 6
        for g, fixed_value in cam_dof.fixed.items():
            values[g] = fixed_value
        for g in cam_dof.active_genes:
            values[g] = float(genes[cursor])
            cursor += 1
        poses.append(Pose6.from_genes(values))
    return poses


def check_placement(pose: Pose6, scene: Scene) -> bool:
    """False when the camera sits in a forbidden region or inside a closed obstacle."""
    position = pose.position_array
    if any(region.contains(position) for region in scene.forbidden_regions):
        return False
    return not scene.inside_obstacle(position)


@dataclass(frozen=True)
class Evaluation:
    fitness: float
    recognized_ratio: float


class DeploymentProblem:
    """Fitness of chromosomes for a fixed mesh, scene, settings and gene layout.

    Frozen cameras are prepended to every decoded deployment.
    """

    def __init__(
        self,
        mesh: Mesh,
        scene: Scene,
        settings: EvaluationSettings,
        dof: DofSpec,
        frozen: Sequence[Pose6] = (),
    ):
        if len(mesh) == 0:
            raise DomainError("Deployment problem needs a non-empty mesh")
        ok, errors = dof.validate()
        if not ok:
            raise DomainError("; ".join(errors))
        self.mesh = mesh
        self.scene = scene
        self.settings = settings
        self.dof = dof
        self.frozen = tuple(frozen)
        self.frustum = build_frustum(settings.intrinsics, settings.delta, settings.fov_override)

    def cameras_for(self, poses: Sequence[Pose6]) -> List[Camera]:
        deployment = list(self.frozen) + list(poses)
        return [Camera(self.settings.intrinsics, pose, self.frustum, i + 1) for i, pose in enumerate(deployment)]

    def evaluate_poses(self, poses: Sequence[Pose6]) -> Evaluation:
        if not all(check_placement(pose, self.scene) for pose in list(self.frozen) + list(poses)):
            return Evaluation(0.0, 0.0)
        _, fusion = fuse_mesh(
            self.cameras_for(poses), self.mesh, self.scene, self.settings.thold, self.settings.fusion_method
        )
        fitness = recognized_area(fusion.strengths, self.mesh.areas(), self.settings.thold)
        ratio = float(np.count_nonzero(fusion.strengths >= self.settings.thold)) / len(self.mesh)
        return Evaluation(fitness, ratio)

    def evaluate(self, ch: Chromosome) -> Evaluation:
        return self.evaluate_poses(decode(ch, self.dof))

    def fitness(self, ch: Chromosome) -> float:
        return self.evaluate(ch).fitness


def fitness(ch: Chromosome, mesh: Mesh, scene: Scene, settings: EvaluationSettings, dof: DofSpec) -> float:
    """Recognized area of the decoded deployment."""
    return DeploymentProblem(mesh, scene, settings, dof).fitness(ch)


@dataclass(frozen=True)
class IgaParams:
    population_size: int = 20
    upsilon_min: int = 1
    upsilon_max: int = 1
    psi: float = 0.1
    iterations: int = 400
    seed: int = 0
    stall_iterations: Optional[int] = None
    insert_elite: bool = False
    init_attempts: int = 20
    workers: int = 1

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "IgaParams":
        stall = data.get("stall_iterations")
        return cls(
            population_size=int(data.get("population_size", 20)),
            upsilon_min=int(data.get("upsilon_min", 1)),
            upsilon_max=int(data.get("upsilon_max", 1)),
            psi=float(data.get("psi", 0.1)),
            iterations=int(data.get("iterations", 400)),
            seed=int(data["seed"]),
            stall_iterations=int(stall) if stall is not None else None,
            insert_elite=bool(data.get("insert_elite", False)),
            init_attempts=int(data.get("init_attempts", 20)),
            workers=int(data.get("workers", 1)),
        )

    def validate(self, length: Optional[int] = None) -> Tuple[bool, List[str]]:
        errors = []
        if self.population_size < 2:
            errors.append(f"optimizer.population_size must be at least 2, got {self.population_size}")
        if not 1 <= self.upsilon_min <= self.upsilon_max:
            errors.append(
                f"optimizer.upsilon_min ({self.upsilon_min}) and upsilon_max ({self.upsilon_max}) "
                "must satisfy 1 ≤ min ≤ max"
            )
        if length is not None and self.upsilon_max > length:
            errors.append(f"optimizer.upsilon_max ({self.upsilon_max}) exceeds chromosome length {length}")
        if not 0 <= self.psi <= 1:
            errors.append(f"optimizer.psi must lie in [0, 1], got {self.psi}")
        if self.iterations < 0:
            errors.append(f"optimizer.iterations must be non-negative, got {self.iterations}")
        if self.stall_iterations is not None and self.stall_iterations < 1:
            errors.append(f"optimizer.stall_iterations must be positive, got {self.stall_iterations}")
        if self.init_attempts < 1:
            errors.append(f"optimizer.init_attempts must be positive, got {self.init_attempts}")
        if self.workers < 1:
            errors.append(f"optimizer.workers must be positive, got {self.workers}")
        return len(errors) == 0, errors

    def clamped_to(self, length: int) -> "IgaParams":
        """Fragment bounds limited to a shorter chromosome."""
        upsilon_max = min(self.upsilon_max, length)
        return replace(self, upsilon_min=min(self.upsilon_min, upsilon_max), upsilon_max=upsilon_max)


@dataclass(frozen=True)
class TraceRow:
    iteration: int
    best_fitness: float
    recognized_ratio: float


@dataclass
class OptimizationResult:
    poses: List[Pose6]
    best_fitness: float
    recognized_ratio: float
    trace: List[TraceRow]
    evaluations: int
    chromosome: Chromosome


class _GeneticSearch:
    """Shared population bookkeeping for the genetic optimizers."""

    def __init__(self, problem: DeploymentProblem, params: IgaParams):
        ok, errors = params.validate(problem.dof.length)
        if not ok:
            raise DomainError("; ".join(errors))
        self.problem = problem
        self.params = params
        self.rng = np.random.default_rng(params.seed)
        self.lower = problem.dof.lower_bounds
        self.upper = problem.dof.upper_bounds
        self.length = problem.dof.length
        self.evaluations = 0

    def _evaluate_all(self, population: np.ndarray) -> List[Evaluation]:
        chromosomes = [Chromosome(genes) for genes in population]
        self.evaluations += len(chromosomes)
        if self.params.workers > 1:
            with ThreadPoolExecutor(max_workers=self.params.workers) as pool:
                return list(pool.map(self.problem.evaluate, chromosomes))
        return [self.problem.evaluate(ch) for ch in chromosomes]

    def _initial_population(self) -> Tuple[np.ndarray, List[Evaluation]]:
        size = self.params.population_size
        for attempt in range(1, self.params.init_attempts + 1):
            population = self.rng.uniform(self.lower, self.upper, size=(size, self.length))
            evaluations = self._evaluate_all(population)
            if any(e.fitness > 0 for e in evaluations):
                return population, evaluations
            logger.warning(f"Initial population {attempt} has no chromosome with nonzero fitness; resampling")
        raise InfeasibleProblemError(
            f"No chromosome with nonzero fitness in {self.params.init_attempts} initial populations "
            f"of {size}; check dof bounds, forbidden regions and obstacles"
        )

    def _mutate(self, genes: np.ndarray, protected: Optional[np.ndarray] = None) -> np.ndarray:
        draws = self.rng.random(self.length)
        fresh = self.rng.uniform(self.lower, self.upper)
        mask = draws < self.params.psi
        if protected is not None:
            mask &= ~protected
        genes[mask] = fresh[mask]
        return genes


class ImprovedGeneticAlgorithm(_GeneticSearch):
    """Every chromosome recombines with the tracked best, so the best-so-far never decreases."""

    def run(self, progress: Optional[ProgressCallback] = None) -> OptimizationResult:
        population, evaluations = self._initial_population()
        best_genes, best = None, Evaluation(0.0, 0.0)

        def scan() -> bool:
            nonlocal best_genes, best
            improved = False
            for genes, evaluation in zip(population, evaluations):
                if best_genes is None or evaluation.fitness > best.fitness:
                    best_genes, best, improved = genes.copy(), evaluation, True
            return improved

        scan()
        trace = [TraceRow(0, best.fitness, best.recognized_ratio)]
        last_improvement = 0
        for iteration in range(1, self.params.iterations + 1):
            children = np.array(
                [self._offspring(genes, ev.fitness, best_genes, best.fitness) for genes, ev in zip(population, evaluations)]
            )
            if self.params.insert_elite:
                worst = int(np.argmin([ev.fitness for ev in evaluations]))
                children[worst] = best_genes
            population = children
            evaluations = self._evaluate_all(population)
            if scan():
                last_improvement = iteration
            trace.append(TraceRow(iteration, best.fitness, best.recognized_ratio))
            if progress is not None:
                progress(iteration, best.fitness)
            stall = self.params.stall_iterations
            if stall is not None and iteration - last_improvement >= stall:
                logger.info(f"Stopping after {iteration} iterations: no improvement for {stall}")
                break

        chromosome = Chromosome(best_genes, best.fitness)
        logger.info(f"IGA best fitness {best.fitness:.6f} m² (ratio {best.recognized_ratio:.4f})")
        return OptimizationResult(
            decode(chromosome, self.problem.dof), best.fitness, best.recognized_ratio, trace, self.evaluations, chromosome
        )

    def _offspring(self, genes: np.ndarray, fit: float, best_genes: np.ndarray, best_fit: float) -> np.ndarray:
        upsilon = int(self.rng.integers(self.params.upsilon_min, self.params.upsilon_max + 1))
        start = int(self.rng.integers(0, self.length - upsilon + 1))
        if fit > best_fit:
            donor, child = genes, best_genes.copy()
        else:
            donor, child = best_genes, genes.copy()
        replaced = np.zeros(self.length, dtype=bool)
        replaced[start : start + upsilon] = True
        child[replaced] = donor[replaced]
        return self._mutate(child, protected=replaced)


class StandardGeneticAlgorithm(_GeneticSearch):
    """Roulette selection, one-point crossover and per-gene mutation without elitism."""

    def run(self, progress: Optional[ProgressCallback] = None) -> OptimizationResult:
        population, evaluations = self._initial_population()
        trace = [self._generation_row(0, evaluations)]
        size = self.params.population_size
        for iteration in range(1, self.params.iterations + 1):
            fitness = np.array([e.fitness for e in evaluations])
            total = fitness.sum()
            probabilities = fitness / total if total > 0 else None
            parents = self.rng.choice(size, size=size, p=probabilities)
            children = []
            for k in range(0, size, 2):
                first = population[parents[k]].copy()
                if k + 1 >= size:
                    children.append(first)
                    break
                second = population[parents[k + 1]].copy()
                cut = int(self.rng.integers(1, self.length)) if self.length > 1 else 0
                children.append(np.concatenate([first[:cut], second[cut:]]))
                children.append(np.concatenate([second[:cut], first[cut:]]))
            population = np.array([self._mutate(child) for child in children])
            evaluations = self._evaluate_all(population)
            row = self._generation_row(iteration, evaluations)
            trace.append(row)
            if progress is not None:
                progress(iteration, row.best_fitness)

        best_index = int(np.argmax([e.fitness for e in evaluations]))
        best = evaluations[best_index]
        chromosome = Chromosome(population[best_index].copy(), best.fitness)
        logger.info(f"SGA final best fitness {best.fitness:.6f} m² (ratio {best.recognized_ratio:.4f})")
        return OptimizationResult(
            decode(chromosome, self.problem.dof), best.fitness, best.recognized_ratio, trace, self.evaluations, chromosome
        )

    @staticmethod
    def _generation_row(iteration: int, evaluations: Sequence[Evaluation]) -> TraceRow:
        best = max(evaluations, key=lambda e: e.fitness)
        return TraceRow(iteration, best.fitness, best.recognized_ratio)


def iga_optimize(
    params: IgaParams,
    dof: DofSpec,
    mesh: Mesh,
    scene: Scene,
    settings: EvaluationSettings,
    frozen: Sequence[Pose6] = (),
    progress: Optional[ProgressCallback] = None,
) -> OptimizationResult:
    """Run the improved GA on the given gene layout."""
    problem = DeploymentProblem(mesh, scene, settings, dof, frozen)
    return ImprovedGeneticAlgorithm(problem, params).run(progress)


def sga_optimize(
    params: IgaParams,
    dof: DofSpec,
    mesh: Mesh,
    scene: Scene,
    settings: EvaluationSettings,
    progress: Optional[ProgressCallback] = None,
) -> OptimizationResult:
    """Run the standard GA baseline on the given gene layout."""
    problem = DeploymentProblem(mesh, scene, settings, dof)
    return StandardGeneticAlgorithm(problem, params).run(progress)


@dataclass(frozen=True)
class HeuristicStep:
    camera_count: int
    recognized_ratio: float
    fitness: float
    poses: Tuple[Pose6, ...]


def heuristic_place(
    max_cameras: int,
    params: IgaParams,
    dof: DofSpec,
    mesh: Mesh,
    scene: Scene,
    settings: EvaluationSettings,
    progress: Optional[Callable[[int], None]] = None,
) -> List[HeuristicStep]:
    """Add cameras one at a time, each placed by the IGA with earlier cameras frozen.

    Camera n uses dof.cameras[n - 1] (the last entry repeats) and seed + n - 1.
    """
    if max_cameras < 1:
        raise DomainError(f"max_cameras must be at least 1, got {max_cameras}")
    if not dof.cameras:
        raise DomainError("Heuristic placement needs a camera dof template")
    placed: List[Pose6] = []
    steps: List[HeuristicStep] = []
    for count in range(1, max_cameras + 1):
        template = dof.cameras[min(count - 1, dof.n_cameras - 1)]
        single = DofSpec((template,))
        step_params = replace(params.clamped_to(single.length), seed=params.seed + count - 1)
        result = iga_optimize(step_params, single, mesh, scene, settings, frozen=placed)
        placed.append(result.poses[0])
        steps.append(HeuristicStep(count, result.recognized_ratio, result.best_fitness, tuple(placed)))
        logger.info(f"Heuristic: {count} cameras reach recognized ratio {result.recognized_ratio:.4f}")
        if progress is not None:
            progress(count)
    return steps
