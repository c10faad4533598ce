"""
GA configuration models
"""

from typing import Annotated, Literal, Optional, Union

from pydantic import BaseModel, Field, model_validator

from app.ai.discriminator import DiscriminatorConfig
from app.chem.selfies import DEFAULT_MAX_LENGTH


class ConstantSchedule(BaseModel):
    """Same beta every generation"""
    kind: Literal["const"] = "const"
    beta: float = 0.0


class TimeAdaptiveSchedule(BaseModel):
    """Penalty beta for one generation whenever max fitness stagnates"""
    kind: Literal["time"] = "time"
    patience: int = Field(default=5, ge=1)
    penalty: float = 1000.0
    start_generation: int = Field(default=100, ge=0)
    hold_until_change: bool = False


class SimilaritySchedule(BaseModel):
    """Penalty beta for one generation whenever recent best molecules look alike"""
    kind: Literal["sim"] = "sim"
    threshold: float = Field(default=0.5, ge=0.0, le=1.0)
    window: int = Field(default=5, ge=2)
    start_generation: int = Field(default=20, ge=0)
    penalty: float = 1000.0


BetaSchedule = Annotated[
    Union[ConstantSchedule, TimeAdaptiveSchedule, SimilaritySchedule],
    Field(discriminator="kind"),
]


class MutationWeights(BaseModel):
    replace: float = Field(default=1.0, ge=0)
    insert: float = Field(default=1.0, ge=0)
    delete: float = Field(default=1.0, ge=0)

    @model_validator(mode="after")
    def check_total(self) -> "MutationWeights":
        if self.replace + self.insert + self.delete <= 0:
            raise ValueError("at least one mutation operator needs a positive weight")
        return self

    def probabilities(self):
        total = self.replace + self.insert + self.delete
        return [self.replace / total, self.insert / total, self.delete / total]


class ConstraintConfig(BaseModel):
    """Similarity constraint to a target molecule"""
    target: str
    delta: float = Field(default=0.4, ge=0.0, le=1.0)


class GAConfig(BaseModel):
    population_size: int = Field(default=500, ge=2)
    generations: int = Field(default=100, ge=0)
    alphabet: str = "default"
    max_length: int = Field(default=DEFAULT_MAX_LENGTH, ge=1)
    schedule: BetaSchedule = Field(default_factory=ConstantSchedule)
    discriminator: DiscriminatorConfig = Field(default_factory=DiscriminatorConfig)
    mutation: MutationWeights = Field(default_factory=MutationWeights)
    elitism: int = Field(default=1, ge=0)
    seed: int = 0
    seed_from_dataset: bool = False
    constraint: Optional[ConstraintConfig] = None
    second_objective: str = "neg_heavy_atoms"
    diversity_sample: int = Field(default=100, ge=1)
    similarity_window: int = Field(default=5, ge=2)
    stagnation_patience: int = Field(default=5, ge=1)
    log_every: int = Field(default=10, ge=1)

    @model_validator(mode="after")
    def check_sizes(self) -> "GAConfig":
        if self.elitism >= self.population_size:
            raise ValueError("elitism must leave room for offspring")
        return self

    @property
    def trains_discriminator(self) -> bool:
        """A model is trained unless disabled or multiplied by a constant zero"""
        if not self.discriminator.enabled:
            return False
        return not (isinstance(self.schedule, ConstantSchedule) and self.schedule.beta == 0)

    @property
    def best_window(self) -> int:
        """Best molecules behind best_similarity; a similarity schedule's own window wins"""
        if isinstance(self.schedule, SimilaritySchedule):
            return self.schedule.window
        return self.similarity_window

    @property
    def patience(self) -> int:
        """Generations behind the stagnated flag; a time-adaptive schedule's own patience wins"""
        if isinstance(self.schedule, TimeAdaptiveSchedule):
            return self.schedule.patience
        return self.stagnation_patience
