"""Agent type models."""

from enum import Enum

from pydantic import BaseModel, Field


class AgentType(str, Enum):
    """Agent types of the asymmetric environment variants."""

    STANDARD = "standard"
    LOW_REWARD = "low_reward"
    HIGH_REWARD = "high_reward"
    WIDE_ZAP = "wide_zap"
    SPAWN_BIASED = "spawn_biased"


# reward multiplier, mismatch penalty, zap width, spawn-bias steps
_TYPE_DEFAULTS = {
    AgentType.STANDARD: (1.0, 2.0, 1, 0),
    AgentType.LOW_REWARD: (0.5, 3.0, 1, 0),
    AgentType.HIGH_REWARD: (1.5, 1.0, 1, 0),
    AgentType.WIDE_ZAP: (1.0, 2.0, 3, 0),
    AgentType.SPAWN_BIASED: (1.0, 2.0, 1, 25),
}


class AgentSpec(BaseModel):
    """An agent's type and asymmetry parameters."""

    agent_id: str = Field(min_length=1)
    agent_type: AgentType = AgentType.STANDARD
    reward_multiplier: float = 1.0
    mismatch_penalty: float = Field(default=2.0, ge=0.0)
    zap_width: int = Field(default=1, ge=1)
    spawn_bias_steps: int = Field(default=0, ge=0)
    phi: float = Field(default=1.0, ge=0.0)

    @classmethod
    def for_type(cls, agent_id: str, agent_type: AgentType, **overrides: object) -> "AgentSpec":
        """Build a spec carrying the defaults of an agent type."""
        multiplier, penalty, width, bias = _TYPE_DEFAULTS[AgentType(agent_type)]
        values: dict = {
            "agent_id": agent_id,
            "agent_type": AgentType(agent_type),
            "reward_multiplier": multiplier,
            "mismatch_penalty": penalty,
            "zap_width": width,
            "spawn_bias_steps": bias,
        }
        values.update(overrides)
        return cls(**values)

    @property
    def is_spawn_biased(self) -> bool:
        return self.spawn_bias_steps > 0
