"""
Genetic algorithm over SELFIES strings: rank selection, point mutations,
elitism and per-generation discriminator training.
"""

import logging
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np
import pandas as pd
from pydantic import BaseModel
from scipy.stats import rankdata

from app.ai.discriminator import DiscriminatorModel, train_generation
from app.chem.dataset import Dataset
from app.chem.descriptors import FitnessRecord
from app.chem.fingerprints import (
    Fingerprint,
    fraction_unique,
    internal_diversity,
    mean_pairwise_similarity,
    morgan_fp,
)
from app.chem.graph import MoleculeGraph, canonical_key, heavy_atom_count
from app.chem.selfies import Alphabet, SelfiesString, decode, encode
from app.chem.smiles import write_smiles
from app.errors import EncodingError, MolgaError, RunAborted
from app.ga.config import GAConfig, MutationWeights
from app.ga.objectives import Evaluator, discriminator_scores
from app.ga.schedules import ScheduleTracker, describe, stagnation_triggered

logger = logging.getLogger(__name__)

OPERATORS = ("replace", "insert", "delete")


@dataclass
class Individual:
    selfies: SelfiesString
    mol: MoleculeGraph
    key: str
    fp: Fingerprint
    base: FitnessRecord
    record: FitnessRecord

    @property
    def total(self) -> float:
        return self.record.total

    @property
    def smiles(self) -> str:
        return write_smiles(self.mol)


class GenerationStats(BaseModel):
    """One trajectory row"""
    generation: int
    max_J: float
    mean_J: float
    max_total: float
    mean_total: float
    beta_used: float
    triggered: bool
    stagnated: bool
    internal_diversity: float
    fraction_unique: float
    mean_heavy_atoms: float
    mean_D: Optional[float] = None
    disc_loss: Optional[float] = None
    best_similarity: float
    best_objective: Optional[float] = None
    diversity_seed: int
    best_smiles: str
    best_selfies: str


@dataclass
class GAState:
    generation: int
    population: List[Individual]
    rng: np.random.Generator
    disc_rng: np.random.Generator
    stats_rng: np.random.Generator
    tracker: ScheduleTracker
    model: Optional[DiscriminatorModel] = None
    max_fitness_history: List[float] = field(default_factory=list)
    max_j_history: List[float] = field(default_factory=list)
    best_history: List[Individual] = field(default_factory=list)
    beta_history: List[float] = field(default_factory=list)
    best_of_run: Optional[Individual] = None
    stats: List[GenerationStats] = field(default_factory=list)


@dataclass
class Trajectory:
    stats: List[GenerationStats]
    population: List[Individual]
    best_of_run: Individual
    model: Optional[DiscriminatorModel] = None

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame([row.model_dump() for row in self.stats])

    @property
    def stagnation_fraction(self) -> float:
        if not self.stats:
            return 0.0
        return sum(row.stagnated for row in self.stats) / len(self.stats)


class RunControl:
    """Cooperative hooks checked between generations"""

    def should_stop(self) -> bool:
        return False

    def wait_if_paused(self) -> None:
        return None

    def on_generation(self, stats: GenerationStats) -> None:
        return None


# ---- operators -------------------------------------------------------------

def select_parents(totals: Sequence[float], count: int, rng: np.random.Generator) -> List[int]:
    """Linear-rank selection with replacement (worst rank 1, best rank N; ties averaged)"""
    if count <= 0:
        return []
    ranks = rankdata(np.asarray(totals, dtype=float), method="average")
    probabilities = ranks / ranks.sum()
    return [int(i) for i in rng.choice(len(totals), size=count, replace=True, p=probabilities)]


def mutate(
    s: SelfiesString,
    alphabet: Alphabet,
    rng: np.random.Generator,
    weights: Optional[MutationWeights] = None,
    max_length: Optional[int] = None,
) -> SelfiesString:
    """Replace, insert or delete one symbol at a uniform position"""
    weights = weights or MutationWeights()
    limit = max_length if max_length is not None else s.max_length
    operator = OPERATORS[int(rng.choice(3, p=weights.probabilities()))]
    symbols = list(s.symbols)
    if not symbols:
        operator = "insert"
    elif operator == "delete" and len(symbols) == 1:
        operator = "replace"

    token = alphabet.tokens[int(rng.integers(len(alphabet)))]
    if operator == "replace":
        symbols[int(rng.integers(len(symbols)))] = token
    elif operator == "insert":
        symbols.insert(int(rng.integers(len(symbols) + 1)), token)
    else:
        del symbols[int(rng.integers(len(symbols)))]
    return SelfiesString(tuple(symbols[:limit]), limit)


# ---- engine ----------------------------------------------------------------

class GeneticAlgorithm:
    """Holds what a run needs besides its state: config, alphabet, scoring and reference data"""

    def __init__(
        self,
        config: GAConfig,
        evaluator: Evaluator,
        alphabet: Optional[Alphabet] = None,
        reference: Optional[Dataset] = None,
        label: str = "GA",
    ):
        self.config = config
        self.evaluator = evaluator
        self.alphabet = alphabet or Alphabet.load(config.alphabet)
        self.reference = reference
        self.label = label
        self._reference_fps: Optional[List[Fingerprint]] = None
        if config.trains_discriminator and reference is None:
            raise MolgaError("discriminator training needs a reference dataset")

    # individuals

    def individual(self, s: SelfiesString) -> Individual:
        mol = decode(s, self.alphabet)
        disc = self.config.discriminator
        fp = morgan_fp(mol, disc.fp_radius, disc.fp_width)
        base = self.evaluator.base(str(s), mol, fp)
        return Individual(s, mol, canonical_key(mol), fp, base, base)

    def reference_fps(self) -> List[Fingerprint]:
        if self._reference_fps is None:
            disc = self.config.discriminator
            self._reference_fps = [morgan_fp(m, disc.fp_radius, disc.fp_width) for m in self.reference.molecules]
        return self._reference_fps

    def initial_selfies(self) -> List[SelfiesString]:
        """Methane copies, or the best-scoring dataset molecules when seeding from data"""
        n = self.config.population_size
        methane = SelfiesString(("[C]",), self.config.max_length)
        if not self.config.seed_from_dataset or self.reference is None:
            return [methane] * n
        scored = []
        for mol in self.reference.molecules:
            try:
                s = encode(mol, self.alphabet, self.config.max_length)
            except EncodingError:
                continue
            scored.append((self.individual(s).base.total, str(s), s))
        scored.sort(key=lambda item: (-item[0], item[1]))
        seeds = [s for _, _, s in scored[:n]] or [methane]
        return [seeds[i % len(seeds)] for i in range(n)]

    def initial_state(self, seeds: Optional[List[SelfiesString]] = None) -> GAState:
        ga_seq, disc_seq, stats_seq = np.random.SeedSequence(self.config.seed).spawn(3)
        state = GAState(
            generation=0,
            population=[],
            rng=np.random.default_rng(ga_seq),
            disc_rng=np.random.default_rng(disc_seq),
            stats_rng=np.random.default_rng(stats_seq),
            tracker=ScheduleTracker(self.config.schedule),
        )
        if self.config.trains_discriminator:
            state.model = DiscriminatorModel.initialize(
                self.config.discriminator.fp_width, self.config.discriminator, state.disc_rng
            )
        population = [self.individual(s) for s in (seeds or self.initial_selfies())]
        self._score(state, population, elites=0)
        return state

    # generation

    def _train(self, state: GAState, population: List[Individual]) -> Optional[float]:
        if state.model is None:
            return None
        disc = self.config.discriminator
        if disc.reinitialize:
            state.model = DiscriminatorModel.initialize(disc.fp_width, disc, state.disc_rng)
        fps = self.reference_fps()
        picks = state.disc_rng.choice(len(fps), size=min(disc.reference_size, len(fps)), replace=False)
        return train_generation(
            state.model, [fps[i] for i in picks], [ind.fp for ind in population], state.disc_rng
        )

    def _score(self, state: GAState, population: List[Individual], elites: int) -> None:
        decision = state.tracker.decide(
            state.generation, state.max_fitness_history, state.max_j_history,
            [ind.fp for ind in state.best_history],
        )
        beta = decision.beta
        loss = self._train(state, population)

        # elites keep their record while beta is unchanged
        keep_elites = bool(state.beta_history) and state.beta_history[-1] == beta
        if state.model is not None:
            scores = discriminator_scores(state.model, [ind.fp for ind in population])
        else:
            scores = [None] * len(population)
        for index, (ind, d) in enumerate(zip(population, scores)):
            if index < elites and keep_elites:
                continue
            ind.record = ind.base.with_discriminator(None if d is None else float(d), beta)

        state.population = population
        best = max(population, key=lambda ind: ind.total)
        state.max_fitness_history.append(best.total)
        state.max_j_history.append(max(ind.base.j for ind in population))
        state.best_history.append(best)
        state.beta_history.append(beta)
        if state.best_of_run is None or best.total > state.best_of_run.total:
            state.best_of_run = best
        row = self._stats(state, beta, decision.triggered, loss)
        state.stats.append(row)

    def _stats(self, state: GAState, beta: float, triggered: bool, loss: Optional[float]) -> GenerationStats:
        population = state.population
        js = np.array([ind.base.j for ind in population])
        totals = np.array([ind.total for ind in population])
        diversity_seed = int(state.stats_rng.integers(2 ** 31))
        sample_rng = np.random.default_rng(diversity_seed)
        sample_size = min(self.config.diversity_sample, len(population))
        sample = sample_rng.choice(len(population), size=sample_size, replace=False)
        ds = [ind.record.d for ind in population if ind.record.d is not None]
        best = state.best_history[-1]
        window = [ind.fp for ind in state.best_history[-self.config.best_window:]]
        return GenerationStats(
            generation=state.generation,
            max_J=float(js.max()),
            mean_J=float(js.mean()),
            max_total=float(totals.max()),
            mean_total=float(totals.mean()),
            beta_used=beta,
            triggered=triggered,
            stagnated=stagnation_triggered(state.max_fitness_history, self.config.patience),
            internal_diversity=internal_diversity([population[i].fp for i in sample]),
            fraction_unique=fraction_unique([ind.mol for ind in population]),
            mean_heavy_atoms=float(np.mean([heavy_atom_count(ind.mol) for ind in population])),
            mean_D=float(np.mean(ds)) if ds else None,
            disc_loss=loss,
            best_similarity=mean_pairwise_similarity(window),
            best_objective=best.record.objective,
            diversity_seed=diversity_seed,
            best_smiles=best.smiles,
            best_selfies=str(best.selfies),
        )

    def step_generation(self, state: GAState) -> GAState:
        """Elites survive, the rest are mutated rank-selected parents"""
        config = self.config
        order = sorted(range(len(state.population)), key=lambda i: (-state.population[i].total, i))
        elites = [state.population[i] for i in order[:config.elitism]]
        parents = select_parents(
            [ind.total for ind in state.population], config.population_size - config.elitism, state.rng
        )
        children = [
            mutate(state.population[i].selfies, self.alphabet, state.rng, config.mutation, config.max_length)
            for i in parents
        ]
        population = [
            Individual(e.selfies, e.mol, e.key, e.fp, e.base, e.record) for e in elites
        ] + [self.individual(s) for s in children]
        state.generation += 1
        self._score(state, population, elites=len(elites))
        return state

    def log_generation(self, row: GenerationStats) -> None:
        message = (
            f"[{self.label}] Generation {row.generation}/{self.config.generations} - "
            f"max J: {row.max_J:.4f}, mean J: {row.mean_J:.4f}, max total: {row.max_total:.4f}, "
            f"beta: {row.beta_used:g}, unique: {row.fraction_unique:.3f}"
        )
        if row.generation % self.config.log_every == 0 or row.generation == self.config.generations:
            logger.info(message)
        else:
            logger.debug(message)

    def run(self, control: Optional[RunControl] = None, seeds: Optional[List[SelfiesString]] = None) -> Trajectory:
        """Seed, then iterate step_generation; failures raise RunAborted with the partial trajectory"""
        control = control or RunControl()
        kind, params = describe(self.config.schedule)
        logger.info(
            f"[{self.label}] Starting - population {self.config.population_size}, "
            f"generations {self.config.generations}, schedule {kind} ({params}), "
            f"discriminator {self.config.discriminator.architecture}/{self.config.discriminator.labels}"
        )
        state: Optional[GAState] = None
        try:
            state = self.initial_state(seeds)
            self.log_generation(state.stats[-1])
            control.on_generation(state.stats[-1])
            while state.generation < self.config.generations:
                control.wait_if_paused()
                if control.should_stop():
                    raise RunAborted(f"[{self.label}] stopped at generation {state.generation}",
                                     partial=self._trajectory(state))
                self.step_generation(state)
                self.log_generation(state.stats[-1])
                control.on_generation(state.stats[-1])
        except RunAborted:
            raise
        except Exception as exc:
            partial = self._trajectory(state) if state is not None and state.stats else None
            logger.error(f"❌ [{self.label}] Generation {state.generation if state else 0} failed: {exc}")
            raise RunAborted(f"{self.label} aborted: {exc}", partial=partial) from exc

        best = state.best_of_run
        logger.info(
            f"✅ [{self.label}] Completed - best total: {best.total:.4f}, best J: {best.base.j:.4f}, "
            f"best: {best.smiles}"
        )
        return self._trajectory(state)

    @staticmethod
    def _trajectory(state: GAState) -> Trajectory:
        return Trajectory(list(state.stats), list(state.population), state.best_of_run, state.model)


def run(
    config: GAConfig,
    evaluator: Optional[Evaluator] = None,
    reference: Optional[Dataset] = None,
    control: Optional[RunControl] = None,
    label: str = "GA",
) -> Trajectory:
    return GeneticAlgorithm(config, evaluator or Evaluator(), reference=reference, label=label).run(control)

