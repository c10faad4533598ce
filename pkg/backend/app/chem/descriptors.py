"""
Descriptor providers and the penalized-logP fitness J(m)
"""

import logging
from functools import lru_cache
from pathlib import Path
from typing import Dict, Optional, Protocol, Tuple, Union

import numpy as np
import pandas as pd
from pydantic import BaseModel, Field

from app.chem.crippen import crippen_logp
from app.chem.dataset import Dataset, load_dataset
from app.chem.graph import MoleculeGraph, canonical_key, max_ring_size
from app.chem.sascore import REFERENCE_SA_MEAN, REFERENCE_SA_STD, FragmentTable, sa_score
from app.config import get_settings
from app.errors import ConfigError, DescriptorError

logger = logging.getLogger(__name__)

RING_LIMIT = 6


class ComponentStats(BaseModel):
    mean: float
    std: float = Field(gt=0)


class NormalizationParams(BaseModel):
    """Reference-set mean / standard deviation per fitness component"""
    logp: ComponentStats = ComponentStats(mean=2.47, std=1.42)
    sa: ComponentStats = ComponentStats(mean=REFERENCE_SA_MEAN, std=REFERENCE_SA_STD)
    ring: ComponentStats = ComponentStats(mean=0.038, std=0.224)

    @classmethod
    def from_dataset(cls, dataset: Dataset, provider: "DescriptorProvider") -> "NormalizationParams":
        """Recompute the statistics on a dataset; a zero spread keeps the default"""
        rows = [(*provider.describe(mol), ring_penalty(mol)) for mol in dataset.molecules]
        values = np.asarray(rows, dtype=float)
        defaults = cls()
        stats = {}
        for column, name in enumerate(("logp", "sa", "ring")):
            mean = float(values[:, column].mean())
            std = float(values[:, column].std())
            if std <= 0:
                logger.warning(f"⚠️  [Normalization] {name} has zero spread in {dataset.source}, keeping default std")
                std = getattr(defaults, name).std
            stats[name] = ComponentStats(mean=mean, std=std)
        params = cls(**stats)
        logger.warning(
            f"⚠️  [Normalization] Recomputed from {dataset.source}: "
            f"logP {params.logp.mean:.3f}/{params.logp.std:.3f}, "
            f"SA {params.sa.mean:.3f}/{params.sa.std:.3f}, "
            f"ring {params.ring.mean:.3f}/{params.ring.std:.3f}"
        )
        return params


class FitnessRecord(BaseModel):
    """One scored molecule: raw and normalized components, J, D and the total"""
    logp: float
    sa: float
    ring_penalty: float
    logp_norm: float
    sa_norm: float
    ring_norm: float
    j: float
    d: Optional[float] = None
    beta: float = 0.0
    objective: Optional[float] = None
    similarity: Optional[float] = None
    feasible: bool = True
    total: float

    def with_discriminator(self, d: Optional[float], beta: float) -> "FitnessRecord":
        base = self.objective if self.objective is not None else self.j
        total = base + beta * d if d is not None else base
        return self.model_copy(update={"d": d, "beta": beta, "total": total})


class DescriptorProvider(Protocol):
    name: str

    def describe(self, mol: MoleculeGraph) -> Tuple[float, float]:
        """(logP, SA) of a molecule"""
        ...


class BuiltinDescriptors:
    """Crippen logP and fragment-based SA computed in-process"""

    name = "builtin"

    def __init__(self, fragments: FragmentTable):
        self.fragments = fragments

    def describe(self, mol: MoleculeGraph) -> Tuple[float, float]:
        return crippen_logp(mol), sa_score(mol, self.fragments)


class TableDescriptors:
    """Precomputed canonical_key -> (logP, SA) values from a CSV file"""

    name = "table"

    def __init__(self, path: Union[str, Path]):
        path = Path(path)
        if not path.exists():
            raise DescriptorError(f"descriptor table not found: {path}")
        frame = pd.read_csv(path)
        missing = {"canonical_key", "logp", "sa"} - set(frame.columns)
        if missing:
            raise DescriptorError(f"descriptor table {path} lacks columns {sorted(missing)}")
        self.path = path
        self.values: Dict[str, Tuple[float, float]] = {
            row.canonical_key: (float(row.logp), float(row.sa)) for row in frame.itertuples(index=False)
        }

    def describe(self, mol: MoleculeGraph) -> Tuple[float, float]:
        key = canonical_key(mol)
        try:
            return self.values[key]
        except KeyError:
            raise DescriptorError(f"molecule {key[:12]} is not in descriptor table {self.path}") from None


def make_provider(
    choice: str = "builtin",
    reference: Optional[Dataset] = None,
    fragments_path: Optional[Union[str, Path]] = None,
) -> DescriptorProvider:
    """Build a provider from 'builtin' or 'table:PATH'"""
    if choice.startswith("table:"):
        return TableDescriptors(choice.split(":", 1)[1])
    if choice != "builtin":
        raise ConfigError(f"unknown descriptor provider {choice!r}, use builtin or table:PATH")
    if fragments_path is not None:
        return BuiltinDescriptors(FragmentTable.load(fragments_path))
    if reference is None:
        raise ConfigError("builtin descriptors need a reference dataset or a fragment table file")
    logger.warning(
        f"⚠️  [Descriptors] No fragment table given, deriving one from {reference.source} "
        f"({len(reference)} molecules)"
    )
    return BuiltinDescriptors(FragmentTable.from_molecules(reference.molecules, source=str(reference.source)))


@lru_cache(maxsize=1)
def default_provider() -> BuiltinDescriptors:
    """Built-in provider with a fragment table derived from the configured dataset"""
    return make_provider("builtin", reference=load_dataset(get_settings().dataset))


def ring_penalty(mol: MoleculeGraph) -> float:
    """Excess size of the largest basis ring over six"""
    return float(max(0, max_ring_size(mol) - RING_LIMIT))


def combine(logp: float, sa: float, ring: float, params: NormalizationParams) -> FitnessRecord:
    logp_norm = (logp - params.logp.mean) / params.logp.std
    sa_norm = (sa - params.sa.mean) / params.sa.std
    ring_norm = (ring - params.ring.mean) / params.ring.std
    j = logp_norm - sa_norm - ring_norm
    return FitnessRecord(
        logp=logp, sa=sa, ring_penalty=ring,
        logp_norm=logp_norm, sa_norm=sa_norm, ring_norm=ring_norm,
        j=j, total=j,
    )


def penalized_logp(
    mol: MoleculeGraph,
    params: Optional[NormalizationParams] = None,
    provider: Optional[DescriptorProvider] = None,
) -> FitnessRecord:
    """J = logP_norm - SA_norm - ring_norm; D and beta unset"""
    params = params or NormalizationParams()
    provider = provider or default_provider()
    logp, sa = provider.describe(mol)
    return combine(logp, sa, ring_penalty(mol), params)
