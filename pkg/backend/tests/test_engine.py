import numpy as np
import pytest

from app.chem.fingerprints import mean_pairwise_similarity, morgan_fp
from app.chem.graph import validate
from app.chem.selfies import SelfiesString, decode
from app.errors import MolgaError, RunAborted
from app.ga.config import MutationWeights, TimeAdaptiveSchedule
from app.ga.engine import GeneticAlgorithm, RunControl, mutate, select_parents
from app.ga.objectives import Evaluator
from app.ga.schedules import stagnation_triggered


class StopAfter(RunControl):
    def __init__(self, generation):
        self.generation = generation
        self.seen = []

    def should_stop(self):
        return len(self.seen) > self.generation

    def on_generation(self, stats):
        self.seen.append(stats.generation)


class TestSelection:
    def test_empty_request(self):
        assert select_parents([1.0, 2.0], 0, np.random.default_rng(0)) == []

    def test_better_ranks_are_picked_more(self):
        picks = select_parents([0.0, 1.0, 2.0, 3.0], 20000, np.random.default_rng(0))
        counts = np.bincount(picks, minlength=4) / 20000
        # linear ranks 1..4 give probabilities 0.1 .. 0.4
        assert counts == pytest.approx([0.1, 0.2, 0.3, 0.4], abs=0.02)

    def test_ties_share_a_rank(self):
        picks = select_parents([5.0, 5.0], 10000, np.random.default_rng(1))
        assert abs(np.mean(picks) - 0.5) < 0.03

    def test_seeded(self):
        totals = [0.3, -1.0, 2.0, 0.0]
        assert select_parents(totals, 10, np.random.default_rng(4)) == select_parents(totals, 10, np.random.default_rng(4))


class TestMutation:
    def test_single_edit(self, alphabet):
        rng = np.random.default_rng(0)
        s = SelfiesString(("[C]", "[C]", "[O]"))
        for _ in range(200):
            child = mutate(s, alphabet, rng)
            assert abs(len(child) - len(s)) <= 1
            assert all(token in alphabet for token in child.symbols)

    def test_operator_weights(self, alphabet):
        rng = np.random.default_rng(1)
        s = SelfiesString(("[C]", "[C]"))
        inserts_only = MutationWeights(replace=0, insert=1, delete=0)
        assert all(len(mutate(s, alphabet, rng, inserts_only)) == 3 for _ in range(20))
        deletes_only = MutationWeights(replace=0, insert=0, delete=1)
        assert all(len(mutate(s, alphabet, rng, deletes_only)) == 1 for _ in range(20))

    def test_empty_string_grows(self, alphabet):
        child = mutate(SelfiesString(()), alphabet, np.random.default_rng(0))
        assert len(child) == 1

    def test_length_bound(self, alphabet):
        s = SelfiesString(("[C]",) * 5, max_length=5)
        inserts_only = MutationWeights(replace=0, insert=1, delete=0)
        assert len(mutate(s, alphabet, np.random.default_rng(0), inserts_only)) == 5


class TestRun:
    def test_zero_generations(self, small_config, provider):
        trajectory = GeneticAlgorithm(small_config(generations=0), Evaluator(provider=provider)).run()
        assert [row.generation for row in trajectory.stats] == [0]
        assert trajectory.stats[0].fraction_unique == pytest.approx(1 / 12)

    def test_elitism_keeps_best_j(self, small_config, provider):
        trajectory = GeneticAlgorithm(small_config(generations=15), Evaluator(provider=provider)).run()
        best = [row.max_J for row in trajectory.stats]
        assert all(b >= a for a, b in zip(best, best[1:]))
        assert len(trajectory.population) == 12
        assert all(validate(ind.mol).ok for ind in trajectory.population)

    def test_seeded_runs_are_identical(self, small_config, provider):
        config = small_config(generations=5, seed=9)
        first = GeneticAlgorithm(config, Evaluator(provider=provider)).run().to_frame()
        second = GeneticAlgorithm(config, Evaluator(provider=provider)).run().to_frame()
        assert first.equals(second)

    def test_discriminator_run(self, small_config, provider, dataset):
        config = small_config(
            generations=3,
            schedule={"kind": "const", "beta": 1.0},
            discriminator={"hidden": [8], "fp_width": 256, "epochs": 1, "reference_size": 20},
        )
        trajectory = GeneticAlgorithm(config, Evaluator(provider=provider), reference=dataset).run()
        assert trajectory.model is not None
        for row in trajectory.stats:
            assert 0.0 < row.mean_D < 1.0
            assert row.disc_loss is not None and np.isfinite(row.disc_loss)
        best = trajectory.best_of_run
        assert best.total == pytest.approx(best.base.j + best.record.d)

    def test_discriminator_needs_reference(self, small_config, provider):
        config = small_config(schedule={"kind": "const", "beta": 1.0}, discriminator={"fp_width": 64})
        with pytest.raises(MolgaError):
            GeneticAlgorithm(config, Evaluator(provider=provider))

    def test_penalty_only_on_trigger_generations(self, small_config, provider, dataset):
        schedule = TimeAdaptiveSchedule(patience=2, penalty=1000.0, start_generation=1)
        config = small_config(
            generations=12,
            population_size=6,
            schedule=schedule.model_dump(),
            discriminator={"hidden": [4], "fp_width": 128, "epochs": 1, "reference_size": 10},
        )
        stats = GeneticAlgorithm(config, Evaluator(provider=provider), reference=dataset).run().stats
        history = [row.max_total for row in stats]
        for row in stats:
            g = row.generation
            expected = g >= schedule.start_generation and stagnation_triggered(history[:g], schedule.patience)
            assert row.triggered == expected
            assert row.beta_used == (1000.0 if expected else 0.0)

    def test_best_similarity_uses_the_schedule_window(self, small_config, provider, alphabet):
        config = small_config(
            generations=5,
            similarity_window=6,
            schedule={"kind": "sim", "window": 2, "start_generation": 100},
        )
        assert config.best_window == 2
        stats = GeneticAlgorithm(config, Evaluator(provider=provider)).run().stats
        disc = config.discriminator
        bests = [decode(SelfiesString.parse(row.best_selfies, alphabet), alphabet) for row in stats]
        fps = [morgan_fp(mol, disc.fp_radius, disc.fp_width) for mol in bests]
        for g in range(1, len(stats)):
            assert stats[g].best_similarity == pytest.approx(mean_pairwise_similarity(fps[g - 1:g + 1]))

    def test_windows_follow_the_schedule(self, small_config):
        plain = small_config(similarity_window=7, stagnation_patience=3)
        assert (plain.best_window, plain.patience) == (7, 3)
        timed = small_config(stagnation_patience=3, schedule={"kind": "time", "patience": 9})
        assert timed.patience == 9

    def test_stop_keeps_partial_trajectory(self, small_config, provider):
        control = StopAfter(2)
        with pytest.raises(RunAborted) as info:
            GeneticAlgorithm(small_config(generations=10), Evaluator(provider=provider)).run(control)
        partial = info.value.partial
        assert [row.generation for row in partial.stats] == [0, 1, 2]

    def test_seed_from_dataset(self, small_config, provider, dataset):
        config = small_config(generations=0, seed_from_dataset=True)
        engine = GeneticAlgorithm(config, Evaluator(provider=provider), reference=dataset)
        trajectory = engine.run()
        assert trajectory.stats[0].mean_heavy_atoms > 1.0
