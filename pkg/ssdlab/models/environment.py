"""Environment configuration, actions, observations and events."""

from dataclasses import dataclass, field
from enum import Enum, IntEnum
from typing import Any, Dict, FrozenSet, List, Literal, Optional, Tuple

import numpy as np
from pydantic import BaseModel, Field, model_validator

from ssdlab.models.agents import AgentSpec, AgentType


class Environment(str, Enum):
    """Supported gridworlds."""

    COINS = "coins"
    HARVEST = "harvest"


class Variant(str, Enum):
    """Symmetric environment or one of its asymmetric variants."""

    SYMMETRIC = "symmetric"
    ASYM_REWARDS = "asym_rewards"
    ASYM_ACTIONS = "asym_actions"


class Action(str, Enum):
    """Per-agent actions."""

    STAY = "stay"
    FORWARD = "forward"
    TURN_LEFT = "turn_left"
    TURN_RIGHT = "turn_right"
    ZAP = "zap"


COINS_ACTIONS: Tuple[Action, ...] = (
    Action.STAY,
    Action.FORWARD,
    Action.TURN_LEFT,
    Action.TURN_RIGHT,
)
HARVEST_ACTIONS: Tuple[Action, ...] = COINS_ACTIONS + (Action.ZAP,)


def legal_actions(environment: "Environment") -> Tuple[Action, ...]:
    """Actions available in an environment."""
    return HARVEST_ACTIONS if environment == Environment.HARVEST else COINS_ACTIONS


class Orientation(IntEnum):
    """Facing direction; y grows downward."""

    NORTH = 0
    EAST = 1
    SOUTH = 2
    WEST = 3

    @property
    def delta(self) -> Tuple[int, int]:
        return _DELTAS[self]

    def left(self) -> "Orientation":
        return Orientation((self - 1) % 4)

    def right(self) -> "Orientation":
        return Orientation((self + 1) % 4)


_DELTAS = {
    Orientation.NORTH: (0, -1),
    Orientation.EAST: (1, 0),
    Orientation.SOUTH: (0, 1),
    Orientation.WEST: (-1, 0),
}


class CellKind(IntEnum):
    """Symbolic observation cell categories."""

    EMPTY = 0
    WALL = 1
    APPLE = 2
    COIN_OWN = 3
    COIN_OTHER = 4
    SELF = 5
    # other agents are encoded as AGENT + index of their type
    AGENT = 10


AGENT_TYPE_ORDER: Tuple[AgentType, ...] = tuple(AgentType)


def agent_cell(agent_type: AgentType) -> int:
    """Cell code of another agent, tagged with its type."""
    return int(CellKind.AGENT) + AGENT_TYPE_ORDER.index(agent_type)


def is_agent_cell(code: int) -> bool:
    return code >= CellKind.AGENT


DEFAULT_REGROWTH = [0.0, 0.0025, 0.005, 0.025]


class EnvConfig(BaseModel):
    """Gridworld configuration.

    Omitted geometry falls back to the environment defaults: a 5x5 Coins grid
    with 500-step episodes and full-grid view, or a 16x9 Harvest map with three
    diamond apple patches, 1000-step episodes and an 11x11 view.
    """

    environment: Environment
    variant: Variant = Variant.SYMMETRIC
    width: int = Field(ge=3)
    height: int = Field(ge=3)
    episode_length: int = Field(gt=0)
    agents: List[AgentSpec]
    view_radius: int = Field(ge=1)

    # Coins
    coin_lifetime: int = Field(default=50, gt=0)
    coin_spawn_prob: float = Field(default=0.1, ge=0.0, le=1.0)
    max_coins: int = Field(default=1, ge=1, le=1)
    spawn_bias_trigger: Literal["self", "other"] = "self"

    # Harvest
    apple_patch_centers: List[Tuple[int, int]] = []
    apple_patch_radius: int = Field(default=2, ge=0)
    regrowth_probs: List[float] = Field(default_factory=lambda: list(DEFAULT_REGROWTH))
    regrowth_radius: int = Field(default=2, ge=1)
    zap_timeout: int = Field(default=25, gt=0)
    beam_length: int = Field(default=5, gt=0)
    cooperate_min_neighbors: int = Field(default=3, ge=0)

    @model_validator(mode="before")
    @classmethod
    def _fill_defaults(cls, data: Any) -> Any:
        if not isinstance(data, dict):
            return data
        data = dict(data)
        environment = Environment(data.get("environment", Environment.COINS))
        if environment == Environment.COINS:
            data.setdefault("width", 5)
            data.setdefault("height", 5)
            data.setdefault("episode_length", 500)
            if data.get("view_radius") is None:
                data["view_radius"] = max(int(data["width"]), int(data["height"])) - 1
        else:
            data.setdefault("width", 16)
            data.setdefault("height", 9)
            data.setdefault("episode_length", 1000)
            if data.get("view_radius") is None:
                data["view_radius"] = 5
            if "apple_patch_centers" not in data:
                data["apple_patch_centers"] = [(3, 4), (8, 4), (13, 4)]
        return data

    @model_validator(mode="after")
    def _check_population(self) -> "EnvConfig":
        ids = [agent.agent_id for agent in self.agents]
        if len(set(ids)) != len(ids):
            raise ValueError(f"duplicate agent ids: {ids}")
        if self.environment == Environment.COINS and len(self.agents) != 2:
            raise ValueError(f"Coins needs exactly 2 agents, got {len(self.agents)}")
        if self.environment == Environment.HARVEST and len(self.agents) < 2:
            raise ValueError(f"Harvest needs at least 2 agents, got {len(self.agents)}")
        if not self.regrowth_probs or any(not 0.0 <= p <= 1.0 for p in self.regrowth_probs):
            raise ValueError("regrowth_probs must be a nonempty list of probabilities")
        for x, y in self.apple_patch_centers:
            if not (0 <= x < self.width and 0 <= y < self.height):
                raise ValueError(f"apple patch center {(x, y)} lies outside the grid")
        return self

    @property
    def agent_ids(self) -> List[str]:
        return [agent.agent_id for agent in self.agents]

    @property
    def actions(self) -> Tuple[Action, ...]:
        return legal_actions(self.environment)

    def agent(self, agent_id: str) -> AgentSpec:
        for spec in self.agents:
            if spec.agent_id == agent_id:
                return spec
        raise KeyError(agent_id)

    def apple_sites(self) -> List[Tuple[int, int]]:
        """Cells of the apple patch layout, row-major."""
        sites = []
        for y in range(self.height):
            for x in range(self.width):
                if any(
                    abs(x - cx) + abs(y - cy) <= self.apple_patch_radius
                    for cx, cy in self.apple_patch_centers
                ):
                    sites.append((x, y))
        return sites

    @classmethod
    def preset(
        cls,
        environment: Environment,
        variant: Variant = Variant.SYMMETRIC,
        n_agents: Optional[int] = None,
        **overrides: Any,
    ) -> "EnvConfig":
        """Build one of the symmetric or asymmetric environment variants.

        Asymmetric variants split the population into two equal subgroups.
        """
        environment = Environment(environment)
        variant = Variant(variant)
        if environment == Environment.COINS:
            n_agents = 2
            first, second = {
                Variant.SYMMETRIC: (AgentType.STANDARD, AgentType.STANDARD),
                Variant.ASYM_REWARDS: (AgentType.LOW_REWARD, AgentType.HIGH_REWARD),
                Variant.ASYM_ACTIONS: (AgentType.STANDARD, AgentType.SPAWN_BIASED),
            }[variant]
        else:
            n_agents = n_agents or 10
            first, second = {
                Variant.SYMMETRIC: (AgentType.STANDARD, AgentType.STANDARD),
                Variant.ASYM_REWARDS: (AgentType.LOW_REWARD, AgentType.HIGH_REWARD),
                Variant.ASYM_ACTIONS: (AgentType.STANDARD, AgentType.WIDE_ZAP),
            }[variant]
        half = n_agents // 2
        agents = [
            AgentSpec.for_type(f"agent_{i}", first if i < half else second)
            for i in range(n_agents)
        ]
        return cls(environment=environment, variant=variant, agents=agents, **overrides)


@dataclass(frozen=True)
class Observation:
    """One agent's local symbolic view."""

    agent_id: str
    window: np.ndarray  # (2r+1, 2r+1) cell codes, indexed [dy + r, dx + r]
    orientation: Orientation
    timed_out: bool
    visible: FrozenSet[str]
    environment: Environment
    beam_length: int = 5
    beam_width: int = 1

    @property
    def radius(self) -> int:
        return int(self.window.shape[0] // 2)

    def at(self, dx: int, dy: int) -> int:
        """Cell code at an offset from the observer; WALL outside the window."""
        r = self.radius
        if abs(dx) > r or abs(dy) > r:
            return int(CellKind.WALL)
        return int(self.window[dy + r, dx + r])


class EventKind(str, Enum):
    """Kinds of per-step events."""

    OWN_COIN = "own_coin"
    MISMATCH_COIN = "mismatch_coin"
    PENALTY = "penalty"
    APPLE = "apple"
    ZAP = "zap"
    TIMEOUT = "timeout"
    SPAWN_BIAS = "spawn_bias"


REWARD_EVENTS = frozenset(
    {EventKind.OWN_COIN, EventKind.MISMATCH_COIN, EventKind.PENALTY, EventKind.APPLE}
)


@dataclass(frozen=True)
class Event:
    """A single logged occurrence during step t."""

    t: int
    agent: str
    kind: EventKind
    value: float = 0.0
    counterparty: Optional[str] = None


@dataclass
class EventLog:
    """All events of one episode."""

    environment: Environment
    agent_types: Dict[str, str]
    episode_length: int = 0
    events: List[Event] = field(default_factory=list)

    @property
    def agent_ids(self) -> List[str]:
        return list(self.agent_types)

    def extend(self, events: List[Event]) -> None:
        self.events.extend(events)

    def of_kind(self, *kinds: EventKind) -> List[Event]:
        return [event for event in self.events if event.kind in kinds]
