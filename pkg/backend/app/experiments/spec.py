"""
Experiment specification, config files and run directories
"""

import json
import logging
from datetime import datetime
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Union

from pydantic import BaseModel, Field, ValidationError

from app.config import get_settings
from app.errors import ConfigError
from app.ga.config import GAConfig

logger = logging.getLogger(__name__)

RESOLVED_FILE = "config.resolved"

ExperimentKind = Literal["baseline", "evolve", "constrained", "pareto", "rediscovery", "similarity"]


class ExperimentSpec(BaseModel):
    """Everything a CLI run needs; written back as config.resolved"""
    kind: ExperimentKind
    ga: GAConfig = Field(default_factory=GAConfig)
    dataset: str = Field(default_factory=lambda: str(get_settings().dataset))
    out: str = Field(default_factory=lambda: str(get_settings().output_dir))
    repeats: int = Field(default=1, ge=1)
    workers: int = Field(default_factory=lambda: get_settings().workers, ge=1)
    descriptors: str = "builtin"
    fragments: Optional[str] = None
    renormalize: bool = False
    dataset_limit: Optional[int] = Field(default=None, ge=1)
    # baseline
    samples: int = Field(default=50_000, ge=1)
    length: int = Field(default=81, ge=1)
    # constrained
    targets: int = Field(default=20, ge=1)
    delta: float = Field(default=0.4, ge=0.0, le=1.0)
    # constrained / goal tasks
    target: Optional[str] = None
    overwrite: bool = False
    run_name: Optional[str] = None

    @property
    def seeds(self) -> List[int]:
        return [self.ga.seed + i for i in range(self.repeats)]

    def resolved_json(self) -> str:
        return json.dumps(self.model_dump(mode="json"), indent=2, sort_keys=True)


def load_config_file(path: Union[str, Path]) -> Dict[str, Any]:
    """Read a JSON config file (an earlier config.resolved works too)"""
    path = Path(path)
    try:
        payload = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc
    if not isinstance(payload, dict):
        raise ConfigError(f"config file {path} must hold a JSON object")
    return payload


def merge(base: Dict[str, Any], overrides: Dict[str, Any]) -> Dict[str, Any]:
    """Nested dict update; overrides win"""
    merged = dict(base)
    for key, value in overrides.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = merge(merged[key], value)
        else:
            merged[key] = value
    return merged


def build_spec(
    kind: str,
    overrides: Optional[Dict[str, Any]] = None,
    config_path: Optional[Union[str, Path]] = None,
) -> ExperimentSpec:
    """Defaults < config file < overrides; validation errors become ConfigError"""
    payload: Dict[str, Any] = load_config_file(config_path) if config_path else {}
    # the run name of a reused config.resolved must not pin the new run directory
    payload.pop("run_name", None)
    payload = merge(payload, overrides or {})
    payload["kind"] = kind
    try:
        return ExperimentSpec.model_validate(payload)
    except ValidationError as exc:
        raise ConfigError(f"invalid {kind} configuration: {exc}") from exc


def run_directory(spec: ExperimentSpec) -> Path:
    """<out>/<kind>-<timestamp>-s<seed>, or <out>/<kind>-s<seed> reused when overwriting"""
    out = Path(spec.out)
    if spec.run_name:
        name = spec.run_name
    elif spec.overwrite:
        name = f"{spec.kind}-s{spec.ga.seed}"
    else:
        name = f"{spec.kind}-{datetime.now().strftime('%Y%m%d-%H%M%S')}-s{spec.ga.seed}"
    path = out / name
    if path.exists() and not (spec.overwrite or spec.run_name):
        suffix = 1
        while (out / f"{name}-{suffix}").exists():
            suffix += 1
        path = out / f"{name}-{suffix}"
    path.mkdir(parents=True, exist_ok=True)
    return path


def write_resolved(spec: ExperimentSpec, run_dir: Path) -> Path:
    target = run_dir / RESOLVED_FILE
    target.write_text(spec.resolved_json() + "\n", encoding="utf-8")
    logger.info(f"[Experiment] Resolved configuration written to {target}")
    return target
