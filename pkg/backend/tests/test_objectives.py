import numpy as np
import pytest

from app.ai.discriminator import DiscriminatorConfig, DiscriminatorModel
from app.chem.fingerprints import morgan_fp
from app.chem.smiles import parse_smiles
from app.errors import ConfigError
from app.ga.objectives import (
    INFEASIBLE,
    Evaluator,
    RediscoveryTask,
    SimilarityConstraint,
    SimilarityTask,
    evaluate,
    second_objective,
)

ASPIRIN = "CC(=O)Oc1ccccc1C(=O)O"


class TestTasks:
    def test_constraint_feasible_at_target(self, provider):
        target = parse_smiles(ASPIRIN)
        record = evaluate(target, provider=provider, objective=SimilarityConstraint(target, delta=0.4))
        assert record.feasible
        assert record.similarity == 1.0
        assert record.total == pytest.approx(record.j)

    def test_constraint_infeasible_far_away(self, provider):
        objective = SimilarityConstraint(parse_smiles(ASPIRIN), delta=0.4)
        record = evaluate(parse_smiles("CCCCCCCC"), provider=provider, objective=objective)
        assert not record.feasible
        assert record.total == INFEASIBLE

    def test_rediscovery_score_is_similarity(self, provider):
        task = RediscoveryTask.from_smiles(ASPIRIN)
        assert evaluate(parse_smiles(ASPIRIN), provider=provider, objective=task).total == 1.0
        other = parse_smiles("CC(=O)Oc1ccccc1")
        expected = task.similarity(morgan_fp(other))
        assert evaluate(other, provider=provider, objective=task).total == pytest.approx(expected)

    def test_similarity_task_caps_at_one(self, provider):
        task = SimilarityTask.from_smiles(ASPIRIN)
        assert task.score(morgan_fp(parse_smiles(ASPIRIN))) == 1.0
        other = morgan_fp(parse_smiles("CC(=O)Oc1ccccc1"))
        assert task.score(other) == pytest.approx(min(1.0, task.similarity(other) / 0.75))

    def test_fingerprint_parameters_follow_the_task(self):
        task = RediscoveryTask.from_smiles(ASPIRIN, radius=1, width=512)
        assert task.target_fp.width == 512 and task.target_fp.radius == 1


class TestSecondObjective:
    def test_known(self, provider):
        graph = parse_smiles(ASPIRIN)
        record = evaluate(graph, provider=provider)
        assert second_objective("neg_heavy_atoms")(graph, record) == -13.0
        assert second_objective("neg_sa")(graph, record) == -record.sa
        assert second_objective("logp")(graph, record) == record.logp

    def test_unknown(self):
        with pytest.raises(ConfigError):
            second_objective("qed")


class TestEvaluator:
    def test_cache_by_selfies_text(self, provider):
        evaluator = Evaluator(provider=provider)
        graph = parse_smiles("CCO")
        fp = morgan_fp(graph)
        first = evaluator.base("[C][C][O]", graph, fp)
        second = evaluator.base("[C][C][O]", graph, fp)
        assert first is second
        assert len(evaluator) == 1

    def test_cache_evicts_least_recently_used(self, provider):
        evaluator = Evaluator(provider=provider, cache_size=2)
        records = {}
        for key, smiles in (("a", "CCO"), ("b", "CCN"), ("a", "CCO"), ("c", "CCC")):
            graph = parse_smiles(smiles)
            records.setdefault(key, evaluator.base(key, graph, morgan_fp(graph)))
        assert len(evaluator) == 2
        assert set(evaluator._cache) == {"a", "c"}
        graph = parse_smiles("CCO")
        assert evaluator.base("a", graph, morgan_fp(graph)) is records["a"]

    def test_cache_size_must_be_positive(self, provider):
        with pytest.raises(ConfigError):
            Evaluator(provider=provider, cache_size=0)

    def test_discriminator_term(self, provider):
        config = DiscriminatorConfig(hidden=[4], fp_width=128)
        model = DiscriminatorModel.initialize(128, config, np.random.default_rng(0))
        record = evaluate(parse_smiles("CCO"), provider=provider, model=model, beta=-2.0)
        assert 0.0 < record.d < 1.0
        assert record.total == pytest.approx(record.j - 2.0 * record.d)
