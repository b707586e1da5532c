"""Scripted visibility traces for estimate propagation."""

from typing import Dict, List

from pydantic import BaseModel, ConfigDict, Field, model_validator


class TraceStep(BaseModel):
    """Rewards and visibility sets of one step."""

    t: int = Field(ge=1)
    rewards: Dict[str, float]
    visible: Dict[str, List[str]] = {}


class Trace(BaseModel):
    """Steps 1..T of a visibility trace over a fixed agent list."""

    agents: List[str] = Field(min_length=2)
    gamma: float = Field(default=0.99, ge=0.0, le=1.0)
    lambda_: float = Field(default=0.9, ge=0.0, le=1.0, alias="lambda")
    steps: List[TraceStep] = []

    model_config = ConfigDict(populate_by_name=True)

    @model_validator(mode="after")
    def _check_steps(self) -> "Trace":
        if len(set(self.agents)) != len(self.agents):
            raise ValueError(f"duplicate agents: {self.agents}")
        for expected, step in enumerate(self.steps, start=1):
            if step.t != expected:
                raise ValueError(f"steps must be numbered 1..T consecutively, got step.{step.t}")
            if set(step.rewards) != set(self.agents):
                raise ValueError(f"step.{step.t}: rewards must cover exactly {self.agents}")
            for owner, visible in step.visible.items():
                unknown = set(visible + [owner]) - set(self.agents)
                if unknown:
                    raise ValueError(f"step.{step.t}: unknown agents {sorted(unknown)}")
        return self
