import pytest
from pydantic import ValidationError

from app.chem.fingerprints import morgan_fp
from app.chem.smiles import parse_smiles
from app.ga.config import ConstantSchedule, GAConfig, SimilaritySchedule, TimeAdaptiveSchedule
from app.ga.schedules import ScheduleTracker, describe, similarity_triggered, stagnation_triggered


class TestStagnation:
    def test_exact_equality_over_patience(self):
        assert stagnation_triggered([1.0, 2.0, 3.0, 3.0, 3.0, 3.0, 3.0], 5)
        assert not stagnation_triggered([2.0, 3.0, 3.0, 3.0, 3.0], 5)

    def test_tiny_difference_is_progress(self):
        assert not stagnation_triggered([3.0, 3.0, 3.0, 3.0, 3.0000001], 5)

    def test_short_history(self):
        assert not stagnation_triggered([3.0, 3.0, 3.0, 3.0], 5)


class TestSimilarityTrigger:
    def test_identical_window_fires(self):
        fp = morgan_fp(parse_smiles("CCO"))
        assert similarity_triggered([fp] * 5, threshold=0.5, window=5)

    def test_before_start_generation(self):
        fp = morgan_fp(parse_smiles("CCO"))
        assert not similarity_triggered([fp] * 5, 0.5, 5, generation=10, start_generation=20)

    def test_dissimilar_window(self):
        fps = [morgan_fp(parse_smiles(s)) for s in ("CCO", "c1ccccc1", "CC(=O)N", "FC(F)F", "CSC")]
        assert not similarity_triggered(fps, threshold=0.5, window=5)

    def test_short_history(self):
        fp = morgan_fp(parse_smiles("CCO"))
        assert not similarity_triggered([fp] * 3, 0.5, 5)


class TestTracker:
    def test_constant(self):
        tracker = ScheduleTracker(ConstantSchedule(beta=-3.0))
        assert tracker.decide(0, [], [], []).beta == -3.0

    def test_time_adaptive(self):
        tracker = ScheduleTracker(TimeAdaptiveSchedule(patience=3, penalty=1000.0, start_generation=2))
        flat = [1.0, 1.0, 1.0]
        assert tracker.decide(1, flat, flat, []).beta == 0.0
        decision = tracker.decide(3, flat, flat, [])
        assert decision.beta == 1000.0 and decision.triggered
        assert tracker.decide(4, [1.0, 1.0, 2.0], [1.0, 1.0, 2.0], []).beta == 0.0

    def test_hold_until_change(self):
        tracker = ScheduleTracker(TimeAdaptiveSchedule(patience=2, start_generation=0, hold_until_change=True))
        assert tracker.decide(2, [1.0, 1.0], [1.0, 1.0], []).triggered
        held = tracker.decide(3, [1.0, 1.0, 1000.5], [1.0, 1.0, 1.0], [])
        assert held.beta == 1000.0 and not held.triggered
        assert tracker.decide(4, [1.0, 1000.5, 3.0], [1.0, 1.0, 3.0], []).beta == 0.0

    def test_similarity(self):
        fp = morgan_fp(parse_smiles("CCO"))
        tracker = ScheduleTracker(SimilaritySchedule(start_generation=0, window=3, penalty=50.0))
        assert tracker.decide(3, [], [], [fp] * 3).beta == 50.0

    def test_describe(self):
        assert describe(ConstantSchedule(beta=2.0)) == ("const", "beta=2")
        assert describe(TimeAdaptiveSchedule())[0] == "time"
        assert describe(SimilaritySchedule())[0] == "sim"


class TestConfig:
    def test_schedule_union_from_dict(self):
        config = GAConfig.model_validate({"schedule": {"kind": "time", "patience": 7}})
        assert isinstance(config.schedule, TimeAdaptiveSchedule)
        assert config.schedule.patience == 7

    def test_defaults(self):
        assert SimilaritySchedule().threshold == 0.5
        assert TimeAdaptiveSchedule().penalty == 1000.0

    def test_elitism_must_leave_room(self):
        with pytest.raises(ValidationError):
            GAConfig(population_size=2, elitism=2)

    def test_zero_constant_beta_skips_training(self):
        assert not GAConfig().trains_discriminator
        assert GAConfig(schedule=ConstantSchedule(beta=1.0)).trains_discriminator
        assert GAConfig(schedule=TimeAdaptiveSchedule()).trains_discriminator
