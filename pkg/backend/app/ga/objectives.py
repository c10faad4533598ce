"""
Fitness assembly: J(m) plus the optional task score, constraint and beta * D(m)
"""

from collections import OrderedDict
from dataclasses import dataclass, field
from typing import Callable, Dict, Optional

import numpy as np

from app.ai.discriminator import DiscriminatorModel, featurize
from app.chem.descriptors import (
    DescriptorProvider,
    FitnessRecord,
    NormalizationParams,
    default_provider,
    penalized_logp,
)
from app.chem.fingerprints import DEFAULT_RADIUS, DEFAULT_WIDTH, Fingerprint, morgan_fp, tanimoto
from app.chem.graph import MoleculeGraph, heavy_atom_count
from app.chem.smiles import parse_smiles
from app.errors import ConfigError

INFEASIBLE = -1e6
SIMILARITY_TASK_CAP = 0.75
CACHE_SIZE = 200_000

# goal-task defaults: celecoxib and albuterol
REDISCOVERY_TARGET = "CC1=CC=C(C=C1)C1=CC(=NN1C1=CC=C(C=C1)S(N)(=O)=O)C(F)(F)F"
SIMILARITY_TARGET = "CC(C)(C)NCC(O)C1=CC(CO)=C(O)C=C1"


class Objective:
    """Base term replacing or constraining J; the default keeps J as is"""

    name = "penalized_logp"

    def apply(self, mol: MoleculeGraph, fp: Fingerprint, record: FitnessRecord) -> FitnessRecord:
        return record


@dataclass
class TargetObjective(Objective):
    """Objectives measured against a target molecule's fingerprint"""
    target: MoleculeGraph
    radius: int = DEFAULT_RADIUS
    width: int = DEFAULT_WIDTH
    target_fp: Fingerprint = field(init=False)

    def __post_init__(self):
        self.target_fp = morgan_fp(self.target, self.radius, self.width)

    @classmethod
    def from_smiles(cls, smiles: str, **kwargs):
        return cls(parse_smiles(smiles), **kwargs)

    def similarity(self, fp: Fingerprint) -> float:
        return tanimoto(fp, self.target_fp)

    def score(self, fp: Fingerprint) -> float:
        return self.similarity(fp)


@dataclass
class SimilarityConstraint(TargetObjective):
    """Total = J when similarity to the target is at least delta, else a hard sentinel"""
    delta: float = 0.4
    name = "constrained"

    def apply(self, mol: MoleculeGraph, fp: Fingerprint, record: FitnessRecord) -> FitnessRecord:
        similarity = self.similarity(fp)
        feasible = similarity >= self.delta
        objective = record.j if feasible else INFEASIBLE
        return record.model_copy(update={
            "similarity": similarity, "feasible": feasible, "objective": objective, "total": objective,
        })


@dataclass
class RediscoveryTask(TargetObjective):
    """Score = Tanimoto similarity to the target"""
    name = "rediscovery"

    def apply(self, mol: MoleculeGraph, fp: Fingerprint, record: FitnessRecord) -> FitnessRecord:
        similarity = self.similarity(fp)
        return record.model_copy(update={"similarity": similarity, "objective": similarity, "total": similarity})


@dataclass
class SimilarityTask(TargetObjective):
    """Score = min(1, similarity / 0.75)"""
    cap: float = SIMILARITY_TASK_CAP
    name = "similarity"

    def score(self, fp: Fingerprint) -> float:
        return min(1.0, self.similarity(fp) / self.cap)

    def apply(self, mol: MoleculeGraph, fp: Fingerprint, record: FitnessRecord) -> FitnessRecord:
        similarity = self.similarity(fp)
        score = min(1.0, similarity / self.cap)
        return record.model_copy(update={"similarity": similarity, "objective": score, "total": score})


SECOND_OBJECTIVES: Dict[str, Callable[[MoleculeGraph, FitnessRecord], float]] = {
    "neg_heavy_atoms": lambda mol, record: -float(heavy_atom_count(mol)),
    "neg_sa": lambda mol, record: -record.sa,
    "logp": lambda mol, record: record.logp,
}


def second_objective(name: str) -> Callable[[MoleculeGraph, FitnessRecord], float]:
    try:
        return SECOND_OBJECTIVES[name]
    except KeyError:
        raise ConfigError(f"unknown second objective {name!r}, choose from {sorted(SECOND_OBJECTIVES)}") from None


class Evaluator:
    """Scores molecules; base records are kept in an LRU cache keyed by SELFIES text"""

    def __init__(
        self,
        params: Optional[NormalizationParams] = None,
        provider: Optional[DescriptorProvider] = None,
        objective: Optional[Objective] = None,
        cache_size: int = CACHE_SIZE,
    ):
        if cache_size < 1:
            raise ConfigError(f"cache_size must be positive, got {cache_size}")
        self.params = params or NormalizationParams()
        self.provider = provider or default_provider()
        self.objective = objective or Objective()
        self.cache_size = cache_size
        self._cache: "OrderedDict[str, FitnessRecord]" = OrderedDict()

    def base(self, key: str, mol: MoleculeGraph, fp: Fingerprint) -> FitnessRecord:
        """J and objective terms, without the discriminator"""
        cached = self._cache.get(key)
        if cached is not None:
            self._cache.move_to_end(key)
            return cached
        cached = self.objective.apply(mol, fp, penalized_logp(mol, self.params, self.provider))
        self._cache[key] = cached
        if len(self._cache) > self.cache_size:
            self._cache.popitem(last=False)
        return cached

    def __len__(self) -> int:
        return len(self._cache)


def evaluate(
    mol: MoleculeGraph,
    params: Optional[NormalizationParams] = None,
    model: Optional[DiscriminatorModel] = None,
    beta: float = 0.0,
    provider: Optional[DescriptorProvider] = None,
    objective: Optional[Objective] = None,
) -> FitnessRecord:
    """Full record: J (or the task score) plus beta * D when a model is given"""
    fp = morgan_fp(mol) if model is None else morgan_fp(mol, model.config.fp_radius, model.config.fp_width)
    record = (objective or Objective()).apply(mol, fp, penalized_logp(mol, params, provider))
    if model is None:
        return record.with_discriminator(None, beta)
    d = float(model.forward(featurize(fp)))
    return record.with_discriminator(d, beta)


def discriminator_scores(model: DiscriminatorModel, fps) -> np.ndarray:
    return np.asarray(model.forward(np.stack([featurize(fp) for fp in fps])), dtype=float)
