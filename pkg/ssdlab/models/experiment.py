"""Experiment configuration and run manifest models."""

from typing import Dict, List, Literal

from pydantic import BaseModel, Field, field_validator, model_validator

from ssdlab.models.environment import EnvConfig
from ssdlab.models.learning import LearnerConfig
from ssdlab.models.shaping import ShapingConfig


class ExperimentConfig(BaseModel):
    """One configuration cell of an experiment, run once per seed."""

    name: str = Field(default="experiment", min_length=1)
    seeds: List[int] = Field(min_length=1)
    output_dir: str = ""  # empty: <output_root>/<name>
    peace_scope: Literal["subgroup", "global"] = "subgroup"
    schelling_episodes: int = Field(default=10, gt=0)
    env: EnvConfig
    shaping: ShapingConfig = ShapingConfig()
    learner: LearnerConfig = LearnerConfig()

    @field_validator("seeds")
    @classmethod
    def _distinct_seeds(cls, seeds: List[int]) -> List[int]:
        if len(set(seeds)) != len(seeds):
            raise ValueError(f"seeds must be distinct, got {seeds}")
        if any(seed < 0 for seed in seeds):
            raise ValueError(f"seeds must be >= 0, got {seeds}")
        return seeds

    @model_validator(mode="after")
    def _check_types(self) -> "ExperimentConfig":
        present = {agent.agent_type.value for agent in self.env.agents}
        unknown = set(self.shaping.phi) - present
        if unknown:
            raise ValueError(
                f"shaping references agent types absent from env: {sorted(unknown)}"
            )
        return self


class RunManifest(BaseModel):
    """Provenance of a training run directory."""

    name: str
    method: str
    config_hash: str
    seeds: List[int]
    files: Dict[str, List[str]]  # seed -> files written for it
    merged_metrics: str = "metrics.csv"
    versions: Dict[str, str]
    config: str  # the experiment config as written to disk
    phi: Dict[str, float] = {}
