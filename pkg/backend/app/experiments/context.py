"""
Shared experiment inputs (dataset, descriptors, normalization) and worker fan-out
"""

import logging
import multiprocessing as mp
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, List, Optional, Sequence, TypeVar

import pandas as pd

from app.chem.dataset import Dataset, load_dataset
from app.chem.descriptors import DescriptorProvider, NormalizationParams, make_provider, penalized_logp
from app.chem.graph import heavy_atom_count
from app.experiments.spec import ExperimentSpec
from app.ga.objectives import Evaluator, Objective

logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")


@dataclass
class ExperimentContext:
    spec: ExperimentSpec
    dataset: Dataset
    provider: DescriptorProvider
    params: NormalizationParams

    @classmethod
    def from_spec(cls, spec: ExperimentSpec) -> "ExperimentContext":
        dataset = load_dataset(spec.dataset, limit=spec.dataset_limit)
        provider = make_provider(spec.descriptors, reference=dataset, fragments_path=spec.fragments)
        params = NormalizationParams.from_dataset(dataset, provider) if spec.renormalize else NormalizationParams()
        return cls(spec, dataset, provider, params)

    def evaluator(self, objective: Optional[Objective] = None) -> Evaluator:
        return Evaluator(self.params, self.provider, objective)

    def score_dataset(self) -> pd.DataFrame:
        """J and its components for every dataset molecule, in file order"""
        rows = []
        for index, (mol, smiles) in enumerate(zip(self.dataset.molecules, self.dataset.smiles)):
            record = penalized_logp(mol, self.params, self.provider)
            rows.append({
                "index": index,
                "smiles": smiles,
                "heavy_atoms": heavy_atom_count(mol),
                "logp": record.logp,
                "sa": record.sa,
                "ring_penalty": record.ring_penalty,
                "J": record.j,
            })
        return pd.DataFrame(rows)


@lru_cache(maxsize=4)
def _cached_context(spec_json: str) -> ExperimentContext:
    return ExperimentContext.from_spec(ExperimentSpec.model_validate_json(spec_json))


def context_for(spec: ExperimentSpec) -> ExperimentContext:
    """One context per process and spec; workers rebuild theirs on first use"""
    return _cached_context(spec.model_dump_json())


def parallel(func: Callable[[T], R], items: Sequence[T], workers: int) -> List[R]:
    """Map over items, in a process pool when workers > 1; results keep input order"""
    if workers <= 1 or len(items) <= 1:
        return [func(item) for item in items]
    processes = min(workers, len(items))
    logger.info(f"[Workers] Running {len(items)} tasks on {processes} processes")
    with mp.Pool(processes) as pool:
        return pool.map(func, items)
