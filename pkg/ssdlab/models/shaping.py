"""Reward-shaping configuration."""

from enum import Enum
from typing import Any, Dict, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from ssdlab.models.agents import AgentType
from ssdlab.models.environment import Environment


class ShapingMethod(str, Enum):
    """Intrinsic reward methods."""

    NONE = "none"
    IA = "ia"
    SVO = "svo"
    FAIR_LOCAL_IA = "fair_local_ia"
    FAIR_LOCAL_SVO = "fair_local_svo"

    @property
    def family(self) -> Optional[str]:
        """`ia`, `svo` or None for the passthrough method."""
        if self in (ShapingMethod.IA, ShapingMethod.FAIR_LOCAL_IA):
            return "ia"
        if self in (ShapingMethod.SVO, ShapingMethod.FAIR_LOCAL_SVO):
            return "svo"
        return None

    @property
    def is_fair_local(self) -> bool:
        return self in (ShapingMethod.FAIR_LOCAL_IA, ShapingMethod.FAIR_LOCAL_SVO)


# alpha, beta, phi per type
_IA_TABLE = {
    Environment.COINS: (
        0.05,
        0.1,
        {"low_reward": 4.0, "standard": 13.5, "high_reward": 12.0, "spawn_biased": 8.0},
    ),
    Environment.HARVEST: (
        3.0,
        0.05,
        {"low_reward": 4.0, "standard": 4.0, "high_reward": 6.0, "wide_zap": 6.0},
    ),
}

# w, phi per type; the target angle is 45 degrees for both
_SVO_TABLE = {
    Environment.COINS: (
        0.004,
        {"low_reward": 2.0, "standard": 4.5, "high_reward": 6.0, "spawn_biased": 1.5},
    ),
    Environment.HARVEST: (
        0.02,
        {"low_reward": 1.0, "standard": 1.0, "high_reward": 1.5, "wide_zap": 1.5},
    ),
}


class ShapingConfig(BaseModel):
    """Which intrinsic penalty to apply and with which weights.

    `phi` maps agent type names to social drive modifiers; types without an
    entry fall back to the agent's own `phi`.
    """

    model_config = ConfigDict(populate_by_name=True)

    method: ShapingMethod = ShapingMethod.NONE
    gamma: float = Field(default=0.99, ge=0.0, le=1.0)
    lambda_: float = Field(default=0.9, ge=0.0, le=1.0, alias="lambda")
    alpha: float = Field(default=0.0, ge=0.0)
    beta: float = Field(default=0.0, ge=0.0)
    w: float = Field(default=0.0, ge=0.0)
    theta_svo_deg: float = Field(default=45.0, ge=0.0, le=90.0)
    phi: Dict[str, float] = {}
    normalized: bool = False
    local: bool = False

    @model_validator(mode="before")
    @classmethod
    def _fair_local_defaults(cls, data: Any) -> Any:
        if isinstance(data, dict) and ShapingMethod(data.get("method", "none")).is_fair_local:
            data = dict(data)
            data.setdefault("normalized", True)
            data.setdefault("local", True)
        return data

    @field_validator("phi")
    @classmethod
    def _check_phi(cls, phi: Dict[str, float]) -> Dict[str, float]:
        known = {t.value for t in AgentType}
        for agent_type, value in phi.items():
            if agent_type not in known:
                raise ValueError(f"phi.{agent_type}: unknown agent type")
            if value < 0:
                raise ValueError(f"phi.{agent_type} must be >= 0, got {value}")
        return phi

    @model_validator(mode="after")
    def _check_fair_local(self) -> "ShapingConfig":
        if self.method.is_fair_local and not (self.normalized and self.local):
            raise ValueError(f"{self.method.value} requires normalized=true and local=true")
        if self.local and not self.normalized and self.method.family is not None:
            # local estimates carry smoothed normalized rewards only
            raise ValueError("local=true requires normalized=true")
        return self

    @classmethod
    def preset(
        cls, environment: Environment, method: ShapingMethod, **overrides: Any
    ) -> "ShapingConfig":
        """Tuned weights for an environment; phi only applies to Fair&Local methods."""
        environment = Environment(environment)
        method = ShapingMethod(method)
        values: Dict[str, Any] = {"method": method, "gamma": 0.99, "lambda": 0.9}
        if method.family == "ia":
            alpha, beta, phi = _IA_TABLE[environment]
            values.update(alpha=alpha, beta=beta)
        elif method.family == "svo":
            w, phi = _SVO_TABLE[environment]
            values.update(w=w, theta_svo_deg=45.0)
        else:
            phi = {}
        if method.is_fair_local:
            values["phi"] = dict(phi)
        values.update(overrides)
        return cls(**values)
