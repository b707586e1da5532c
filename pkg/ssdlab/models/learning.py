"""Tabular learner configuration."""

from pydantic import BaseModel, Field, model_validator


class LearnerConfig(BaseModel):
    """Independent Q-learning hyperparameters.

    `epsilon_decay_steps` of None decays over the first 20% of training.
    """

    learning_rate: float = Field(default=0.1, gt=0.0, le=1.0)
    gamma: float = Field(default=0.99, ge=0.0, le=1.0)
    epsilon_start: float = Field(default=0.8, ge=0.0, le=1.0)
    epsilon_end: float = Field(default=0.1, ge=0.0, le=1.0)
    epsilon_decay_steps: int = Field(default=0, ge=0)
    eval_epsilon: float = Field(default=0.05, ge=0.0, le=1.0)
    training_steps: int = Field(default=20_000, ge=0)
    eval_period: int = Field(default=2_000, gt=0)
    eval_episodes: int = Field(default=2, gt=0)
    episode_length: int = Field(default=0, ge=0)  # 0 keeps the environment's
    seed: int = 0

    @model_validator(mode="after")
    def _check_schedule(self) -> "LearnerConfig":
        if self.epsilon_end > self.epsilon_start:
            raise ValueError(
                f"epsilon must not increase: start {self.epsilon_start} < end {self.epsilon_end}"
            )
        return self

    @property
    def decay_steps(self) -> int:
        if self.epsilon_decay_steps:
            return self.epsilon_decay_steps
        return max(1, self.training_steps // 5)
