"""
Similarity-constrained optimization: improve J while staying within delta of a target
"""

import logging
from typing import Optional, Tuple

from pydantic import BaseModel

from app.chem.dataset import Dataset
from app.chem.descriptors import DescriptorProvider, FitnessRecord, NormalizationParams, penalized_logp
from app.chem.fingerprints import DEFAULT_RADIUS, DEFAULT_WIDTH, morgan_fp, tanimoto
from app.chem.graph import MoleculeGraph
from app.chem.selfies import Alphabet, encode
from app.chem.smiles import parse_smiles, write_smiles
from app.errors import MolgaError
from app.ga.config import GAConfig
from app.ga.engine import GeneticAlgorithm, RunControl, Trajectory
from app.ga.objectives import Evaluator, SimilarityConstraint

logger = logging.getLogger(__name__)


def constrained_evaluate(
    mol: MoleculeGraph,
    target: MoleculeGraph,
    delta: float,
    params: Optional[NormalizationParams] = None,
    provider: Optional[DescriptorProvider] = None,
) -> FitnessRecord:
    """J when similarity to the target is at least delta, the INFEASIBLE sentinel otherwise"""
    constraint = SimilarityConstraint(target, delta=delta)
    return constraint.apply(mol, morgan_fp(mol), penalized_logp(mol, params, provider))


class ConstrainedResult(BaseModel):
    """Outcome of one constrained run"""
    target_smiles: str
    delta: float
    target_j: float
    best_smiles: str
    best_j: float
    similarity: float
    improvement: float
    feasible: bool
    success: bool
    seed: int


def verify_feasible(best: MoleculeGraph, target: MoleculeGraph, delta: float, radius: int = DEFAULT_RADIUS,
                    width: int = DEFAULT_WIDTH) -> float:
    """Recompute similarity from a re-parsed SMILES; raises when the constraint is broken"""
    similarity = tanimoto(morgan_fp(parse_smiles(write_smiles(best)), radius, width), morgan_fp(target, radius, width))
    if similarity < delta:
        raise MolgaError(f"reported feasible molecule has similarity {similarity:.4f} < delta {delta}")
    return similarity


def run_constrained(
    target_smiles: str,
    config: GAConfig,
    params: Optional[NormalizationParams] = None,
    provider: Optional[DescriptorProvider] = None,
    reference: Optional[Dataset] = None,
    control: Optional[RunControl] = None,
    label: Optional[str] = None,
) -> Tuple[ConstrainedResult, Trajectory]:
    """Evolve from copies of the target; improvement = best feasible J - target J"""
    delta = config.constraint.delta if config.constraint is not None else 0.4
    target = parse_smiles(target_smiles)
    disc = config.discriminator
    objective = SimilarityConstraint(target, radius=disc.fp_radius, width=disc.fp_width, delta=delta)
    evaluator = Evaluator(params, provider, objective)
    alphabet = Alphabet.load(config.alphabet)
    label = label or f"Constrained seed={config.seed}"

    engine = GeneticAlgorithm(config, evaluator, alphabet=alphabet, reference=reference, label=label)
    start = encode(target, alphabet, config.max_length)
    trajectory = engine.run(control, seeds=[start] * config.population_size)

    target_j = penalized_logp(target, params, evaluator.provider).j
    best = trajectory.best_of_run
    feasible = bool(best.base.feasible)
    if feasible:
        similarity = verify_feasible(best.mol, target, delta, disc.fp_radius, disc.fp_width)
        best_j = best.base.j
    else:
        similarity = float(best.base.similarity or 0.0)
        best_j = target_j
    improvement = best_j - target_j
    result = ConstrainedResult(
        target_smiles=write_smiles(target),
        delta=delta,
        target_j=target_j,
        best_smiles=best.smiles,
        best_j=best_j,
        similarity=similarity,
        improvement=improvement,
        feasible=feasible,
        success=feasible and improvement > 0,
        seed=config.seed,
    )
    logger.info(
        f"[{label}] Target {result.target_smiles} - J {target_j:.4f} -> {best_j:.4f} "
        f"(improvement {improvement:.4f}, similarity {similarity:.3f})"
    )
    return result, trajectory
