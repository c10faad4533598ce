"""
Plot-data bundles: tidy long-format series plus a JSON manifest for a finished run
"""

import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Union

import pandas as pd

from app.errors import ReportError
from app.experiments.commands import (
    AGGREGATE_FILE,
    CONSTRAINED_FILE,
    DATASET_SCORES_FILE,
    PARETO_FILE,
    SAMPLES_FILE,
    SUMMARY_FILE,
    trajectory_path,
    write_json,
)
from app.experiments.spec import RESOLVED_FILE, ExperimentSpec

logger = logging.getLogger(__name__)

REPORT_DIR = "report"
SERIES_FILE = "series.csv"
FRONT_FILE = "front.csv"
MANIFEST_FILE = "manifest.json"
LONG_COLUMNS = ["metric", "generation", "seed", "item", "value"]

REQUIRED_FILES = {
    "baseline": [SUMMARY_FILE, SAMPLES_FILE, DATASET_SCORES_FILE],
    "evolve": [SUMMARY_FILE, AGGREGATE_FILE],
    "rediscovery": [SUMMARY_FILE, AGGREGATE_FILE],
    "similarity": [SUMMARY_FILE, AGGREGATE_FILE],
    "pareto": [SUMMARY_FILE, AGGREGATE_FILE, PARETO_FILE],
    "constrained": [SUMMARY_FILE, CONSTRAINED_FILE],
}
GENERATIONAL = {"evolve", "rediscovery", "similarity", "pareto"}
SKIPPED_COLUMNS = {"generation", "diversity_seed", "seed"}


def _check(run_dir: Path) -> ExperimentSpec:
    resolved = run_dir / RESOLVED_FILE
    if not resolved.exists():
        raise ReportError(str(run_dir), [RESOLVED_FILE, SUMMARY_FILE])
    spec = ExperimentSpec.model_validate_json(resolved.read_text(encoding="utf-8"))
    missing = [name for name in REQUIRED_FILES[spec.kind] if not (run_dir / name).exists()]
    if spec.kind in GENERATIONAL and not any(trajectory_path(run_dir, seed).exists() for seed in spec.seeds):
        missing.append("trajectory_s<seed>.csv")
    if missing:
        raise ReportError(str(run_dir), missing)
    return spec


def _melt(frame: pd.DataFrame, metrics: List[str], generation=None, seed=None, item=None) -> pd.DataFrame:
    """Wide rows to (metric, generation, seed, item, value)"""
    ids = {"generation": generation, "seed": seed, "item": item}
    keep = {name: frame[column] for name, column in ids.items() if column is not None and column in frame}
    wide = pd.DataFrame({**keep, **{m: frame[m] for m in metrics}})
    long = wide.melt(id_vars=list(keep), value_vars=metrics, var_name="metric", value_name="value")
    for name in ids:
        if name not in long:
            long[name] = pd.NA
    return long[LONG_COLUMNS]


def _trajectory_series(run_dir: Path, spec: ExperimentSpec) -> pd.DataFrame:
    frames = []
    for seed in spec.seeds:
        path = trajectory_path(run_dir, seed)
        if not path.exists():
            logger.warning(f"⚠️  [Report] {path.name} missing, seed {seed} left out")
            continue
        frame = pd.read_csv(path)
        frame["seed"] = seed
        metrics = [
            c for c in frame.select_dtypes(include=["number", "bool"]).columns if c not in SKIPPED_COLUMNS
        ]
        frame[metrics] = frame[metrics].astype(float)
        frames.append(_melt(frame, metrics, generation="generation", seed="seed"))
    return pd.concat(frames, ignore_index=True)


def _baseline_series(run_dir: Path, spec: ExperimentSpec) -> pd.DataFrame:
    samples = pd.read_csv(run_dir / SAMPLES_FILE)
    samples["seed"] = spec.ga.seed
    dataset = pd.read_csv(run_dir / DATASET_SCORES_FILE).rename(columns={"J": "dataset_J"})
    return pd.concat([
        _melt(samples, ["J", "logp", "sa", "heavy_atoms"], seed="seed", item="index"),
        _melt(dataset, ["dataset_J"], item="index"),
    ], ignore_index=True)


def _constrained_series(run_dir: Path) -> pd.DataFrame:
    frame = pd.read_csv(run_dir / CONSTRAINED_FILE)
    metrics = [m for m in ("improvement", "similarity", "best_j", "target_j") if m in frame]
    frame = frame.dropna(subset=metrics)
    return _melt(frame, metrics, seed="seed", item="target_index")


def cmd_report(run_dir: Union[str, Path]) -> Dict[str, Any]:
    """Write <run>/report/series.csv (+ front.csv for Pareto runs) and manifest.json"""
    run_dir = Path(run_dir)
    if not run_dir.is_dir():
        raise ReportError(str(run_dir), [RESOLVED_FILE, SUMMARY_FILE])
    spec = _check(run_dir)
    bundle = run_dir / REPORT_DIR
    bundle.mkdir(exist_ok=True)

    if spec.kind == "baseline":
        series = _baseline_series(run_dir, spec)
    elif spec.kind == "constrained":
        series = _constrained_series(run_dir)
    else:
        series = _trajectory_series(run_dir, spec)
    series.to_csv(bundle / SERIES_FILE, index=False)
    files = [SERIES_FILE]

    if spec.kind == "pareto":
        points = pd.read_csv(run_dir / PARETO_FILE)
        front = points[points["on_front"].astype(bool)][["source", "smiles", "objective1", "objective2"]]
        front.sort_values(["source", "objective1"], kind="mergesort").to_csv(bundle / FRONT_FILE, index=False)
        files.append(FRONT_FILE)

    summary = json.loads((run_dir / SUMMARY_FILE).read_text(encoding="utf-8"))
    manifest = {
        "run": run_dir.name,
        "kind": spec.kind,
        "files": files,
        "metrics": sorted(series["metric"].unique().tolist()),
        "seeds": spec.seeds,
        "summary": summary,
    }
    write_json(bundle / MANIFEST_FILE, manifest)
    logger.info(f"✅ [Report] {spec.kind} bundle written to {bundle} ({len(series)} rows)")
    return manifest
