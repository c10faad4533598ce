"""
Experiment commands: baseline sampling, evolution runs, constrained optimization,
Pareto analysis and the goal-directed tasks. Each writes into its own run directory.
"""

import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

import numpy as np
import pandas as pd
from pydantic import BaseModel

from app.chem.descriptors import penalized_logp
from app.chem.fingerprints import morgan_fp, tanimoto
from app.chem.graph import heavy_atom_count
from app.chem.selfies import Alphabet, SelfiesString, decode, encode, random_selfies
from app.chem.smiles import parse_smiles, write_smiles
from app.errors import ConfigError, EncodingError, MolgaError, RunAborted
from app.experiments.context import context_for, parallel
from app.experiments.spec import ExperimentSpec, run_directory, write_resolved
from app.ga.config import ConstraintConfig
from app.ga.constrained import run_constrained
from app.ga.engine import GeneticAlgorithm, RunControl, Trajectory
from app.ga.objectives import (
    REDISCOVERY_TARGET,
    SIMILARITY_TARGET,
    RediscoveryTask,
    SimilarityTask,
    TargetObjective,
    second_objective,
)
from app.ga.pareto import hypervolume_2d, nadir_point, pareto_indices

logger = logging.getLogger(__name__)

SUMMARY_FILE = "summary.json"
AGGREGATE_FILE = "aggregate.csv"
SAMPLES_FILE = "samples.csv"
DATASET_SCORES_FILE = "dataset_scores.csv"
CONSTRAINED_FILE = "constrained.csv"
PARETO_FILE = "pareto_points.csv"
BASELINE_CHUNK = 2000


@dataclass
class CommandResult:
    run_dir: Path
    summary: Dict[str, Any]
    completed: bool


class SeedOutcome(BaseModel):
    """Per-seed result of a GA run"""
    seed: int
    completed: bool
    error: Optional[str] = None
    generations: int = 0
    best_total: Optional[float] = None
    best_j: Optional[float] = None
    best_objective: Optional[float] = None
    best_similarity: Optional[float] = None
    best_smiles: Optional[str] = None
    best_selfies: Optional[str] = None
    stagnation_fraction: Optional[float] = None
    final_mean_heavy_atoms: Optional[float] = None
    final_fraction_unique: Optional[float] = None
    final_internal_diversity: Optional[float] = None


def write_json(path: Path, payload: Dict[str, Any]) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True, default=str) + "\n", encoding="utf-8")


def trajectory_path(run_dir: Path, seed: int) -> Path:
    return run_dir / f"trajectory_s{seed}.csv"


def write_trajectory(run_dir: Path, seed: int, trajectory: Trajectory) -> None:
    """Trajectory CSV, final population, best-of-run record and the discriminator checkpoint"""
    trajectory.to_frame().to_csv(trajectory_path(run_dir, seed), index=False)
    lines = [f"{ind.smiles}\t{ind.selfies}\t{ind.total!r}" for ind in trajectory.population]
    (run_dir / f"population_s{seed}.smi").write_text("\n".join(lines) + "\n", encoding="utf-8")
    best = trajectory.best_of_run
    write_json(run_dir / f"best_s{seed}.json", {
        "seed": seed,
        "smiles": best.smiles,
        "selfies": str(best.selfies),
        "canonical_key": best.key,
        "record": best.record.model_dump(),
    })
    if trajectory.model is not None:
        trajectory.model.save(run_dir / f"discriminator_s{seed}.npz")


def _outcome(seed: int, trajectory: Optional[Trajectory], error: Optional[str]) -> SeedOutcome:
    if trajectory is None or not trajectory.stats:
        return SeedOutcome(seed=seed, completed=False, error=error)
    best = trajectory.best_of_run
    last = trajectory.stats[-1]
    return SeedOutcome(
        seed=seed,
        completed=error is None,
        error=error,
        generations=last.generation,
        best_total=best.total,
        best_j=best.base.j,
        best_objective=best.base.objective,
        best_similarity=best.base.similarity,
        best_smiles=best.smiles,
        best_selfies=str(best.selfies),
        stagnation_fraction=trajectory.stagnation_fraction,
        final_mean_heavy_atoms=last.mean_heavy_atoms,
        final_fraction_unique=last.fraction_unique,
        final_internal_diversity=last.internal_diversity,
    )


def goal_objective(spec: ExperimentSpec) -> Optional[TargetObjective]:
    """Task score replacing J for the rediscovery and similarity experiments"""
    disc = spec.ga.discriminator
    if spec.kind == "rediscovery":
        return RediscoveryTask.from_smiles(spec.target or REDISCOVERY_TARGET, radius=disc.fp_radius, width=disc.fp_width)
    if spec.kind == "similarity":
        return SimilarityTask.from_smiles(spec.target or SIMILARITY_TARGET, radius=disc.fp_radius, width=disc.fp_width)
    return None


def _write_points(run_dir: Path, seed: int, trajectory: Trajectory, name: str) -> None:
    """(J, second objective) of the final population and best-of-run, unique by structure"""
    score = second_objective(name)
    rows, seen = [], set()
    for ind in [trajectory.best_of_run, *trajectory.population]:
        if ind.key in seen:
            continue
        seen.add(ind.key)
        rows.append({
            "seed": seed,
            "smiles": ind.smiles,
            "canonical_key": ind.key,
            "objective1": ind.base.j,
            "objective2": score(ind.mol, ind.base),
        })
    pd.DataFrame(rows).to_csv(run_dir / f"points_s{seed}.csv", index=False)


def evolve_seed(spec: ExperimentSpec, run_dir: Union[str, Path], seed: int,
                control: Optional[RunControl] = None) -> SeedOutcome:
    """One GA run; partial trajectories are flushed when the run aborts"""
    run_dir = Path(run_dir)
    label = f"{spec.kind.capitalize()} seed={seed}"
    trajectory, error = None, None
    try:
        context = context_for(spec)
        config = spec.ga.model_copy(update={"seed": seed})
        engine = GeneticAlgorithm(
            config, context.evaluator(goal_objective(spec)), reference=context.dataset, label=label
        )
        trajectory = engine.run(control)
    except RunAborted as exc:
        trajectory, error = exc.partial, str(exc)
    except MolgaError as exc:
        error = str(exc)
        logger.error(f"❌ [{label}] Failed before the first generation: {exc}")
    if trajectory is not None:
        write_trajectory(run_dir, seed, trajectory)
        if spec.kind == "pareto":
            _write_points(run_dir, seed, trajectory, spec.ga.second_objective)
        if error is not None:
            logger.warning(f"⚠️  [{label}] Partial trajectory written ({len(trajectory.stats)} generations)")
    return _outcome(seed, trajectory, error)


def _evolve_task(task: Tuple[ExperimentSpec, str, int]) -> SeedOutcome:
    spec, run_dir, seed = task
    return evolve_seed(spec, run_dir, seed)


def run_seeds(spec: ExperimentSpec, run_dir: Path, control: Optional[RunControl] = None) -> List[SeedOutcome]:
    """All seeds of a spec; a control object keeps the runs in this process"""
    if control is not None:
        return [evolve_seed(spec, run_dir, seed, control) for seed in spec.seeds]
    return parallel(_evolve_task, [(spec, str(run_dir), seed) for seed in spec.seeds], spec.workers)


def aggregate_trajectories(run_dir: Path, seeds: List[int]) -> pd.DataFrame:
    """Per-generation mean and std across seeds of every numeric trajectory column"""
    frames = []
    for seed in seeds:
        path = trajectory_path(run_dir, seed)
        if path.exists():
            frame = pd.read_csv(path)
            frame["seed"] = seed
            frames.append(frame)
    if not frames:
        return pd.DataFrame()
    combined = pd.concat(frames, ignore_index=True)
    columns = [
        c for c in combined.select_dtypes(include=["number", "bool"]).columns
        if c not in ("generation", "seed", "diversity_seed")
    ]
    grouped = combined[["generation", *columns]].astype({c: float for c in columns}).groupby("generation")
    aggregate = grouped.agg(["mean", "std"])
    aggregate.columns = [f"{metric}_{stat}" for metric, stat in aggregate.columns]
    aggregate.insert(0, "n_seeds", grouped.size())
    return aggregate.reset_index()


def _seed_summary(outcomes: List[SeedOutcome]) -> Dict[str, Any]:
    best_js = [o.best_j for o in outcomes if o.best_j is not None]
    return {
        "seeds": [o.model_dump() for o in outcomes],
        "completed": all(o.completed for o in outcomes),
        "best_j_mean": float(np.mean(best_js)) if best_js else None,
        "best_j_std": float(np.std(best_js)) if best_js else None,
    }


def _start(spec: ExperimentSpec) -> Path:
    run_dir = run_directory(spec)
    write_resolved(spec, run_dir)
    logger.info(f"[{spec.kind.capitalize()}] Starting in {run_dir} - seeds {spec.seeds}, workers {spec.workers}")
    return run_dir


def _finish(spec: ExperimentSpec, run_dir: Path, summary: Dict[str, Any]) -> CommandResult:
    summary = {"kind": spec.kind, **summary}
    write_json(run_dir / SUMMARY_FILE, summary)
    completed = bool(summary.get("completed", True))
    if completed:
        logger.info(f"✅ [{spec.kind.capitalize()}] Completed - outputs in {run_dir}")
    else:
        logger.error(f"❌ [{spec.kind.capitalize()}] Finished with failures - partial outputs in {run_dir}")
    return CommandResult(run_dir, summary, completed)


# ---- baseline --------------------------------------------------------------

def _score_samples(task: Tuple[ExperimentSpec, int, List[Tuple[str, ...]]]) -> List[Dict[str, Any]]:
    spec, start, samples = task
    context = context_for(spec)
    alphabet = Alphabet.load(spec.ga.alphabet)
    rows = []
    for offset, symbols in enumerate(samples):
        s = SelfiesString(symbols, max(spec.length, len(symbols)))
        mol = decode(s, alphabet)
        record = penalized_logp(mol, context.params, context.provider)
        rows.append({
            "index": start + offset,
            "selfies": str(s),
            "smiles": write_smiles(mol),
            "heavy_atoms": heavy_atom_count(mol),
            "logp": record.logp,
            "sa": record.sa,
            "ring_penalty": record.ring_penalty,
            "J": record.j,
        })
    return rows


def cmd_baseline(spec: ExperimentSpec, control: Optional[RunControl] = None) -> CommandResult:
    """Score uniformly random SELFIES and the best molecule of the dataset"""
    run_dir = _start(spec)
    context = context_for(spec)
    alphabet = Alphabet.load(spec.ga.alphabet)
    rng = np.random.default_rng(spec.ga.seed)
    limit = max(spec.length, spec.ga.max_length)
    samples = [random_selfies(spec.length, alphabet, rng, limit).symbols for _ in range(spec.samples)]
    chunks = [(spec, start, samples[start:start + BASELINE_CHUNK]) for start in range(0, len(samples), BASELINE_CHUNK)]
    rows = [row for chunk in parallel(_score_samples, chunks, spec.workers) for row in chunk]

    frame = pd.DataFrame(rows)
    frame.to_csv(run_dir / SAMPLES_FILE, index=False)
    dataset_scores = context.score_dataset()
    dataset_scores.to_csv(run_dir / DATASET_SCORES_FILE, index=False)
    best = dataset_scores.loc[dataset_scores["J"].idxmax()]

    summary = {
        "alphabet": alphabet.name,
        "length": spec.length,
        "samples": len(frame),
        "mean_J": float(frame["J"].mean()),
        "std_J": float(frame["J"].std(ddof=0)),
        "max_J": float(frame["J"].max()),
        "best_of_dataset_J": float(best["J"]),
        "best_of_dataset_smiles": str(best["smiles"]),
        "completed": True,
    }
    logger.info(
        f"[Baseline] {len(frame)} random SELFIES - J {summary['mean_J']:.3f} ± {summary['std_J']:.3f}, "
        f"best of dataset {summary['best_of_dataset_J']:.3f}"
    )
    return _finish(spec, run_dir, summary)


# ---- evolution -------------------------------------------------------------

def cmd_evolve(spec: ExperimentSpec, control: Optional[RunControl] = None) -> CommandResult:
    """GA runs per seed plus the across-seed per-generation mean and std"""
    run_dir = _start(spec)
    outcomes = run_seeds(spec, run_dir, control)
    aggregate_trajectories(run_dir, spec.seeds).to_csv(run_dir / AGGREGATE_FILE, index=False)
    return _finish(spec, run_dir, _seed_summary(outcomes))


def cmd_goal(spec: ExperimentSpec, control: Optional[RunControl] = None) -> CommandResult:
    """Rediscovery / similarity task: top-1 score per seed against the best dataset molecule"""
    objective = goal_objective(spec)
    if objective is None:
        raise ConfigError(f"{spec.kind} is not a goal-directed task")
    run_dir = _start(spec)
    outcomes = run_seeds(spec, run_dir, control)
    aggregate_trajectories(run_dir, spec.seeds).to_csv(run_dir / AGGREGATE_FILE, index=False)

    context = context_for(spec)
    disc = spec.ga.discriminator
    dataset_scores = [objective.score(morgan_fp(mol, disc.fp_radius, disc.fp_width)) for mol in context.dataset.molecules]
    best_index = int(np.argmax(dataset_scores))
    summary = _seed_summary(outcomes)
    summary.update({
        "target": write_smiles(objective.target),
        "top1_scores": [o.best_objective for o in outcomes],
        "successes": [o.best_objective is not None and o.best_objective >= 1.0 for o in outcomes],
        "best_of_dataset_score": float(dataset_scores[best_index]),
        "best_of_dataset_smiles": context.dataset.smiles[best_index],
    })
    return _finish(spec, run_dir, summary)


# ---- constrained -----------------------------------------------------------

def select_targets(spec: ExperimentSpec) -> List[Tuple[int, str]]:
    """The K lowest-J dataset molecules the alphabet can encode (ties by file order)"""
    if spec.target:
        return [(0, spec.target)]
    context = context_for(spec)
    alphabet = Alphabet.load(spec.ga.alphabet)
    scores = context.score_dataset().sort_values(["J", "index"], kind="mergesort")
    targets = []
    for index in scores["index"]:
        mol = context.dataset.molecules[index]
        try:
            encode(mol, alphabet, spec.ga.max_length)
        except EncodingError as exc:
            logger.warning(f"⚠️  [Constrained] Skipping target {context.dataset.smiles[index]}: {exc}")
            continue
        targets.append((int(index), context.dataset.smiles[index]))
        if len(targets) == spec.targets:
            break
    return targets


def constrained_target(spec: ExperimentSpec, target_index: int, smiles: str, seed: int,
                       control: Optional[RunControl] = None) -> Dict[str, Any]:
    context = context_for(spec)
    config = spec.ga.model_copy(update={
        "seed": seed, "constraint": ConstraintConfig(target=smiles, delta=spec.delta),
    })
    label = f"Constrained target={target_index} seed={seed}"
    try:
        result, _ = run_constrained(
            smiles, config, context.params, context.provider, context.dataset, control=control, label=label
        )
    except MolgaError as exc:
        logger.error(f"❌ [{label}] {exc}")
        return {"target_index": target_index, "target_smiles": smiles, "seed": seed,
                "completed": False, "error": str(exc)}
    return {"target_index": target_index, **result.model_dump(), "completed": True, "error": None}


def _constrained_task(task: Tuple[ExperimentSpec, int, str, int]) -> Dict[str, Any]:
    return constrained_target(*task)


def recheck_feasible(frame: pd.DataFrame, delta: float, radius: int, width: int) -> int:
    """Similarity recomputed from the written SMILES; count of feasible rows below delta"""
    violations = 0
    for row in frame[frame["feasible"].astype(bool)].itertuples(index=False):
        similarity = tanimoto(
            morgan_fp(parse_smiles(row.best_smiles), radius, width),
            morgan_fp(parse_smiles(row.target_smiles), radius, width),
        )
        if similarity < delta:
            logger.error(f"❌ [Constrained] {row.best_smiles} reported feasible at similarity {similarity:.4f}")
            violations += 1
    return violations


def cmd_constrained(spec: ExperimentSpec, control: Optional[RunControl] = None) -> CommandResult:
    """Improve the lowest-J molecules while keeping similarity >= delta to each"""
    run_dir = _start(spec)
    targets = select_targets(spec)
    tasks = [(spec, index, smiles, seed) for index, smiles in targets for seed in spec.seeds]
    if control is not None:
        rows = [constrained_target(*task, control=control) for task in tasks]
    else:
        rows = parallel(_constrained_task, tasks, spec.workers)

    frame = pd.DataFrame(rows)
    frame.to_csv(run_dir / CONSTRAINED_FILE, index=False)
    done = frame[frame["completed"]] if "improvement" in frame else frame.iloc[0:0]
    disc = spec.ga.discriminator
    violations = recheck_feasible(done, spec.delta, disc.fp_radius, disc.fp_width) if len(done) else 0
    improvements = done["improvement"].to_numpy(dtype=float) if len(done) else np.array([])
    summary = {
        "delta": spec.delta,
        "targets": len(targets),
        "runs": len(frame),
        "success_rate": float(done["success"].astype(bool).mean()) if len(done) else 0.0,
        "mean_improvement": float(improvements.mean()) if len(improvements) else None,
        "std_improvement": float(improvements.std()) if len(improvements) else None,
        "violations": violations,
        "completed": bool(frame["completed"].all()) and violations == 0,
    }
    logger.info(
        f"[Constrained] {len(done)}/{len(frame)} runs finished - success rate {summary['success_rate']:.2f}, "
        f"delta {spec.delta}"
    )
    return _finish(spec, run_dir, summary)


# ---- pareto ----------------------------------------------------------------

def cmd_pareto(spec: ExperimentSpec, control: Optional[RunControl] = None) -> CommandResult:
    """Fronts of GA molecules and dataset molecules on (J, second objective), with hypervolumes"""
    run_dir = _start(spec)
    outcomes = run_seeds(spec, run_dir, control)
    aggregate_trajectories(run_dir, spec.seeds).to_csv(run_dir / AGGREGATE_FILE, index=False)

    frames = [pd.read_csv(run_dir / f"points_s{o.seed}.csv") for o in outcomes
              if (run_dir / f"points_s{o.seed}.csv").exists()]
    ga_points = pd.concat(frames, ignore_index=True).drop_duplicates("canonical_key") if frames else pd.DataFrame(
        columns=["seed", "smiles", "canonical_key", "objective1", "objective2"]
    )
    ga_points.insert(0, "source", "ga")

    context = context_for(spec)
    score = second_objective(spec.ga.second_objective)
    dataset_rows = []
    for mol, smiles in zip(context.dataset.molecules, context.dataset.smiles):
        record = penalized_logp(mol, context.params, context.provider)
        dataset_rows.append({"source": "dataset", "seed": None, "smiles": smiles, "canonical_key": None,
                             "objective1": record.j, "objective2": score(mol, record)})
    dataset_points = pd.DataFrame(dataset_rows)

    ga_xy = list(zip(ga_points["objective1"], ga_points["objective2"]))
    data_xy = list(zip(dataset_points["objective1"], dataset_points["objective2"]))
    nadir = nadir_point(ga_xy + data_xy)
    ga_front = set(pareto_indices(ga_xy))
    data_front = set(pareto_indices(data_xy))
    ga_points["on_front"] = [i in ga_front for i in range(len(ga_points))]
    dataset_points["on_front"] = [i in data_front for i in range(len(dataset_points))]
    pd.concat([ga_points, dataset_points], ignore_index=True).to_csv(run_dir / PARETO_FILE, index=False)

    summary = _seed_summary(outcomes)
    summary.update({
        "second_objective": spec.ga.second_objective,
        "nadir": list(nadir),
        "ga_front_size": len(ga_front),
        "dataset_front_size": len(data_front),
        "hypervolume_ga": hypervolume_2d([ga_xy[i] for i in sorted(ga_front)], nadir) if ga_front else 0.0,
        "hypervolume_dataset": hypervolume_2d([data_xy[i] for i in sorted(data_front)], nadir),
    })
    logger.info(
        f"[Pareto] Hypervolume GA {summary['hypervolume_ga']:.4f} vs dataset {summary['hypervolume_dataset']:.4f}"
    )
    return _finish(spec, run_dir, summary)


COMMANDS = {
    "baseline": cmd_baseline,
    "evolve": cmd_evolve,
    "constrained": cmd_constrained,
    "pareto": cmd_pareto,
    "rediscovery": cmd_goal,
    "similarity": cmd_goal,
}


def run_experiment(spec: ExperimentSpec, control: Optional[RunControl] = None) -> CommandResult:
    return COMMANDS[spec.kind](spec, control)
