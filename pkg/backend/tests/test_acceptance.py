"""
Desk-scale acceptance runs. Deselected by default; run with `pytest -m slow`.
"""

import os
from pathlib import Path

import numpy as np
import pandas as pd
import pytest
from scipy.stats import spearmanr

from app.chem.crippen import crippen_logp
from app.chem.descriptors import NormalizationParams
from app.chem.graph import validate
from app.chem.sascore import sa_score
from app.chem.selfies import decode, random_selfies
from app.chem.smiles import parse_smiles
from app.experiments.commands import run_experiment
from app.experiments.spec import build_spec
from app.ga.config import GAConfig
from app.ga.engine import GeneticAlgorithm
from app.ga.objectives import Evaluator

pytestmark = pytest.mark.slow

ORACLE_FIXTURE = Path(os.getenv("MOLGA_ORACLE_FIXTURE", Path(__file__).parent / "data" / "oracle_fixture.csv"))
SEEDS = (0, 1, 2)


def _run(provider, reference=None, **overrides):
    payload = {"population_size": 500, "generations": 150, "discriminator": {"architecture": "none"}}
    payload.update(overrides)
    config = GAConfig.model_validate(payload)
    return GeneticAlgorithm(config, Evaluator(provider=provider), reference=reference).run()


def test_random_strings_always_decode(alphabet):
    rng = np.random.default_rng(2024)
    for _ in range(100_000):
        length = int(rng.integers(1, 82))
        assert validate(decode(random_selfies(length, alphabet, rng, 81), alphabet)).ok


def test_unpenalized_run_improves(provider):
    stats = _run(provider).stats
    best = [row.max_J for row in stats]
    assert all(b >= a for a, b in zip(best, best[1:]))
    assert best[-1] > best[0] + 3.0


class TestBetaDirection:
    @staticmethod
    def _final(provider, dataset, beta):
        rows = []
        for seed in SEEDS:
            trajectory = _run(
                provider, dataset, seed=seed,
                schedule={"kind": "const", "beta": beta},
                discriminator={"architecture": "mlp"},
            ) if beta else _run(provider, seed=seed)
            top = sorted(trajectory.population, key=lambda ind: -ind.total)[:10]
            rows.append({
                "heavy_atoms": trajectory.stats[-1].mean_heavy_atoms,
                "top_j": float(np.mean([ind.base.j for ind in top])),
                "fraction_unique": trajectory.stats[-1].fraction_unique,
            })
        return pd.DataFrame(rows).mean()

    def test_negative_beta_shortens_molecules(self, provider, dataset):
        assert self._final(provider, dataset, -100.0)["heavy_atoms"] < self._final(provider, dataset, 0.0)["heavy_atoms"]

    def test_large_beta_pins_j_near_zero(self, provider, dataset):
        penalized = self._final(provider, dataset, 100.0)
        assert abs(penalized["top_j"]) < 2.0
        assert 0.2 <= penalized["fraction_unique"] <= 0.8


def test_similarity_penalty_keeps_best_molecules_apart(provider, dataset):
    fractions = []
    for seed in SEEDS:
        stats = _run(
            provider, dataset, seed=seed, generations=100,
            schedule={"kind": "sim", "threshold": 0.5, "window": 5, "start_generation": 20, "penalty": 1000.0},
            discriminator={"architecture": "mlp"},
        ).stats
        post = [row.best_similarity for row in stats if row.generation >= 20]
        fractions.append(np.mean([s < 0.5 for s in post]))
    assert np.mean(fractions) >= 0.8


def test_constrained_desk_scale(tmp_path):
    spec = build_spec("constrained", {
        "out": str(tmp_path),
        "targets": 20,
        "delta": 0.4,
        "ga": {"population_size": 100, "generations": 100, "discriminator": {"architecture": "none"}},
    })
    summary = run_experiment(spec).summary
    assert summary["violations"] == 0
    assert summary["success_rate"] >= 0.8
    assert summary["mean_improvement"] > 1.0


@pytest.mark.skipif(not ORACLE_FIXTURE.exists(), reason="run scripts/build_oracle_fixture.py to create the fixture")
def test_descriptor_fidelity(provider):
    oracle = pd.read_csv(ORACLE_FIXTURE).head(100)
    mols = [parse_smiles(s) for s in oracle["smiles"]]
    logp = np.array([crippen_logp(m) for m in mols])
    sa = np.array([sa_score(m, provider.fragments) for m in mols])
    assert np.mean(np.abs(logp - oracle["logp"]) <= 0.5) >= 0.9
    assert spearmanr(sa, oracle["sa"]).correlation >= 0.8
    assert abs(logp.mean() - NormalizationParams().logp.mean) <= 0.1 * NormalizationParams().logp.mean
