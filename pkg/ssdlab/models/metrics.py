"""Evaluation metric models."""

from typing import Dict, List, Optional, Tuple

from pydantic import BaseModel, Field


class AgentMetrics(BaseModel):
    """Metrics of a single agent in one episode."""

    agent_type: str
    episode_return: float = 0.0
    own_coin_proportion: Optional[float] = None  # None when nothing was collected
    reward_time: float = 0.0  # mean step of positive rewards
    timeout_steps: float = 0.0
    zaps: float = 0.0


class GroupMetrics(BaseModel):
    """Metrics aggregated over a set of agents (one type, or everyone)."""

    n_agents: int = Field(ge=1)
    average_return: float = 0.0
    own_coin_proportion: Optional[float] = None
    sustainability: float = 0.0
    peace: Optional[float] = None  # Harvest only
    average_zaps: float = 0.0


class EpisodeMetrics(BaseModel):
    """Full metric set of one episode, or the average of several."""

    agents: Dict[str, AgentMetrics]
    types: Dict[str, GroupMetrics]
    overall: GroupMetrics
    average_age: Optional[float] = None
    average_range: Optional[float] = None
    episodes: int = 1

    def rows(self) -> List[Tuple[str, str, float]]:
        """Flatten into (scope, name, value) triples; undefined values are skipped."""
        rows: List[Tuple[str, str, float]] = []
        for agent_id, metrics in self.agents.items():
            for name, value in metrics.model_dump(exclude={"agent_type"}).items():
                if value is not None:
                    rows.append(("agent", f"{agent_id}.{name}", float(value)))
        for agent_type, group in self.types.items():
            for name, value in group.model_dump().items():
                if value is not None:
                    rows.append(("type", f"{agent_type}.{name}", float(value)))
        for name, value in self.overall.model_dump().items():
            if value is not None:
                rows.append(("global", name, float(value)))
        for name in ("average_age", "average_range"):
            value = getattr(self, name)
            if value is not None:
                rows.append(("global", name, float(value)))
        return rows
