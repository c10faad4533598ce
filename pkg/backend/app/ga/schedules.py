"""
Beta schedules: constant, stagnation-triggered and similarity-triggered
"""

from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

from app.chem.fingerprints import MolOrFp, mean_pairwise_similarity
from app.ga.config import ConstantSchedule, SimilaritySchedule, TimeAdaptiveSchedule


def stagnation_triggered(history: Sequence[float], patience: int) -> bool:
    """True when the last `patience` max-fitness values are exactly equal"""
    if patience < 1 or len(history) < patience:
        return False
    tail = history[-patience:]
    return all(value == tail[0] for value in tail)


def similarity_triggered(
    best_history: Sequence[MolOrFp],
    threshold: float,
    window: int,
    generation: Optional[int] = None,
    start_generation: int = 0,
) -> bool:
    """True when the mean pairwise similarity of the last `window` best molecules exceeds threshold"""
    if generation is not None and generation < start_generation:
        return False
    if len(best_history) < window:
        return False
    return mean_pairwise_similarity(list(best_history[-window:])) > threshold


@dataclass
class ScheduleDecision:
    beta: float
    triggered: bool = False


class ScheduleTracker:
    """Decides the beta of each generation from the run's histories"""

    def __init__(self, schedule):
        self.schedule = schedule
        self.held_j: Optional[float] = None

    def decide(
        self,
        generation: int,
        max_fitness_history: Sequence[float],
        max_j_history: Sequence[float],
        best_history: Sequence[MolOrFp],
    ) -> ScheduleDecision:
        schedule = self.schedule
        if isinstance(schedule, ConstantSchedule):
            return ScheduleDecision(schedule.beta)

        if isinstance(schedule, TimeAdaptiveSchedule):
            if generation < schedule.start_generation:
                return ScheduleDecision(0.0)
            if self.held_j is not None:
                if max_j_history and max_j_history[-1] == self.held_j:
                    return ScheduleDecision(schedule.penalty, triggered=False)
                self.held_j = None
            if stagnation_triggered(max_fitness_history, schedule.patience):
                if schedule.hold_until_change and max_j_history:
                    self.held_j = max_j_history[-1]
                return ScheduleDecision(schedule.penalty, triggered=True)
            return ScheduleDecision(0.0)

        if isinstance(schedule, SimilaritySchedule):
            fired = similarity_triggered(
                best_history, schedule.threshold, schedule.window, generation, schedule.start_generation
            )
            return ScheduleDecision(schedule.penalty if fired else 0.0, triggered=fired)

        raise TypeError(f"unknown schedule {schedule!r}")


def describe(schedule) -> Tuple[str, str]:
    """Short (kind, parameters) text for logs"""
    if isinstance(schedule, ConstantSchedule):
        return "const", f"beta={schedule.beta:g}"
    if isinstance(schedule, TimeAdaptiveSchedule):
        return "time", (f"patience={schedule.patience}, penalty={schedule.penalty:g}, "
                        f"start={schedule.start_generation}")
    return "sim", (f"threshold={schedule.threshold:g}, window={schedule.window}, "
                   f"penalty={schedule.penalty:g}, start={schedule.start_generation}")
