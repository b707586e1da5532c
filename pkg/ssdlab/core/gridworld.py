"""Deterministic Coins and Harvest gridworld engine."""

import csv
import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, FrozenSet, List, Mapping, Optional, Set, Tuple, Union

import numpy as np
from pydantic import BaseModel

from ssdlab.core.errors import ActionError, ConfigurationError
from ssdlab.models.agents import AgentSpec
from ssdlab.models.environment import (
    Action,
    CellKind,
    EnvConfig,
    Environment,
    Event,
    EventKind,
    EventLog,
    Observation,
    Orientation,
    agent_cell,
)

logger = logging.getLogger(__name__)

Cell = Tuple[int, int]

EVENT_CSV_COLUMNS = ["t", "agent", "event_kind", "value", "counterparty"]


@dataclass
class Coin:
    """The single coin present in Coins."""

    color: str  # owning agent id
    position: Cell
    age: int = 0


@dataclass
class EnvState:
    """Complete mutable state of one episode."""

    config: EnvConfig
    t: int
    positions: Dict[str, Optional[Cell]]
    orientations: Dict[str, Orientation]
    timeouts: Dict[str, int]
    rng: np.random.Generator
    coin: Optional[Coin] = None
    apples: Optional[np.ndarray] = None  # (height, width) bool, Harvest only
    bias_timer: int = 0
    bias_color: Optional[str] = None

    def copy(self) -> "EnvState":
        rng = np.random.Generator(type(self.rng.bit_generator)())
        rng.bit_generator.state = self.rng.bit_generator.state
        return EnvState(
            config=self.config,
            t=self.t,
            positions=dict(self.positions),
            orientations=dict(self.orientations),
            timeouts=dict(self.timeouts),
            rng=rng,
            coin=Coin(self.coin.color, self.coin.position, self.coin.age) if self.coin else None,
            apples=None if self.apples is None else self.apples.copy(),
            bias_timer=self.bias_timer,
            bias_color=self.bias_color,
        )

    def is_active(self, agent_id: str) -> bool:
        return self.timeouts[agent_id] == 0 and self.positions[agent_id] is not None

    def fingerprint(self) -> str:
        """Canonical text form used to compare states bit-exactly."""
        payload = {
            "t": self.t,
            "positions": {k: list(v) if v else None for k, v in self.positions.items()},
            "orientations": {k: int(v) for k, v in self.orientations.items()},
            "timeouts": self.timeouts,
            "coin": (
                [self.coin.color, list(self.coin.position), self.coin.age] if self.coin else None
            ),
            "apples": None if self.apples is None else self.apples.astype(int).tolist(),
            "bias": [self.bias_timer, self.bias_color],
            "rng": self.rng.bit_generator.state,
        }
        return json.dumps(payload, sort_keys=True, default=str)


@dataclass
class StepResult:
    """Outcome of one environment step."""

    state: EnvState
    rewards: Dict[str, float]
    events: List[Event]


def reset(config: EnvConfig, seed: int) -> EnvState:
    """Start an episode; identical (config, seed) yields identical states."""
    rng = np.random.default_rng(seed)
    apples = None
    blocked: Set[Cell] = set()
    if config.environment == Environment.HARVEST:
        apples = np.zeros((config.height, config.width), dtype=bool)
        for x, y in config.apple_sites():
            apples[y, x] = True
            blocked.add((x, y))

    free = [
        (x, y)
        for y in range(config.height)
        for x in range(config.width)
        if (x, y) not in blocked
    ]
    if len(config.agents) > len(free):
        raise ConfigurationError(
            f"{len(config.agents)} agents do not fit on {len(free)} free cells"
        )
    order = rng.permutation(len(free))
    positions: Dict[str, Optional[Cell]] = {}
    orientations: Dict[str, Orientation] = {}
    for index, spec in enumerate(config.agents):
        positions[spec.agent_id] = free[int(order[index])]
        orientations[spec.agent_id] = Orientation(int(rng.integers(4)))

    logger.debug("reset %s episode with seed %d", config.environment.value, seed)
    return EnvState(
        config=config,
        t=0,
        positions=positions,
        orientations=orientations,
        timeouts={spec.agent_id: 0 for spec in config.agents},
        rng=rng,
        apples=apples,
    )


def beam_cells(position: Cell, orientation: Orientation, length: int, width: int) -> List[Cell]:
    """Cells covered by a zap beam, ahead of the shooter."""
    dx, dy = orientation.delta
    # lateral axis is the forward direction rotated by 90 degrees
    lx, ly = -dy, dx
    half = (width - 1) // 2
    cells = []
    for distance in range(1, length + 1):
        for offset in range(-half, half + 1):
            cells.append(
                (
                    position[0] + dx * distance + lx * offset,
                    position[1] + dy * distance + ly * offset,
                )
            )
    return cells


def _in_grid(config: EnvConfig, cell: Cell) -> bool:
    return 0 <= cell[0] < config.width and 0 <= cell[1] < config.height


def _validate_actions(state: EnvState, joint_action: Mapping[str, Action]) -> Dict[str, Action]:
    config = state.config
    unknown = set(joint_action) - set(config.agent_ids)
    if unknown:
        raise ActionError(f"actions given for unknown agents: {sorted(unknown)}")
    actions: Dict[str, Action] = {}
    for agent_id in config.agent_ids:
        raw = joint_action.get(agent_id)
        action = Action(raw) if raw is not None else None
        if not state.is_active(agent_id):
            if action not in (None, Action.STAY):
                raise ActionError(
                    f"{agent_id} is timed out for {state.timeouts[agent_id]} more steps "
                    f"and can only stay, got {action.value}"
                )
            actions[agent_id] = Action.STAY
            continue
        if action is None:
            raise ActionError(f"missing action for active agent {agent_id}")
        if action == Action.ZAP and config.environment != Environment.HARVEST:
            raise ActionError(f"zap is only legal in harvest, got it from {agent_id}")
        actions[agent_id] = action
    return actions


def step(state: EnvState, joint_action: Mapping[str, Action]) -> StepResult:
    """Advance one step; the input state is left untouched."""
    actions = _validate_actions(state, joint_action)
    state = state.copy()
    config = state.config
    t = state.t
    events: List[Event] = []
    rewards = {agent_id: 0.0 for agent_id in config.agent_ids}

    inactive = [a for a in config.agent_ids if not state.is_active(a)]
    for agent_id in inactive:
        events.append(Event(t, agent_id, EventKind.TIMEOUT, 1.0))
    active = [a for a in config.agent_ids if state.is_active(a)]

    # zaps resolve against pre-step positions, before any movement
    victims: Set[str] = set()
    if config.environment == Environment.HARVEST:
        occupant = {state.positions[a]: a for a in active}
        for shooter in active:
            if actions[shooter] != Action.ZAP:
                continue
            spec = config.agent(shooter)
            cells = beam_cells(
                state.positions[shooter],  # type: ignore[arg-type]
                state.orientations[shooter],
                config.beam_length,
                spec.zap_width,
            )
            for cell in cells:
                victim = occupant.get(cell)
                if victim is not None and victim != shooter:
                    events.append(Event(t, shooter, EventKind.ZAP, 1.0, victim))
                    victims.add(victim)
        for victim in sorted(victims, key=config.agent_ids.index):
            state.positions[victim] = None
            state.timeouts[victim] = config.zap_timeout

    movers = [a for a in active if a not in victims]
    _resolve_movement(state, movers, actions)

    if config.environment == Environment.COINS:
        _collect_coin(state, movers, rewards, events)
    else:
        _collect_apples(state, movers, rewards, events)

    for agent_id in inactive:
        state.timeouts[agent_id] -= 1
        if state.timeouts[agent_id] == 0:
            _respawn(state, agent_id)

    if config.environment == Environment.COINS:
        _advance_coins(state)
    else:
        _regrow_apples(state)

    state.t += 1
    return StepResult(state=state, rewards=rewards, events=events)


def _resolve_movement(state: EnvState, movers: List[str], actions: Dict[str, Action]) -> None:
    """Apply turns and simultaneous forward moves; conflicting moves are blocked."""
    config = state.config
    targets: Dict[str, Cell] = {}
    for agent_id in movers:
        action = actions[agent_id]
        if action == Action.TURN_LEFT:
            state.orientations[agent_id] = state.orientations[agent_id].left()
        elif action == Action.TURN_RIGHT:
            state.orientations[agent_id] = state.orientations[agent_id].right()
        elif action == Action.FORWARD:
            x, y = state.positions[agent_id]  # type: ignore[misc]
            dx, dy = state.orientations[agent_id].delta
            cell = (x + dx, y + dy)
            if _in_grid(config, cell):
                targets[agent_id] = cell

    # agents contesting one cell are all blocked
    claims: Dict[Cell, List[str]] = {}
    for agent_id, cell in targets.items():
        claims.setdefault(cell, []).append(agent_id)
    blocked = {a for agents in claims.values() if len(agents) > 1 for a in agents}

    # swaps are conflicts too
    position_of = {
        state.positions[a]: a for a in config.agent_ids if state.positions[a] is not None
    }
    for agent_id, cell in targets.items():
        other = position_of.get(cell)
        if other is not None and targets.get(other) == state.positions[agent_id]:
            blocked.add(agent_id)
            blocked.add(other)

    # a move into a cell whose occupant stays put is blocked, until nothing changes
    changed = True
    while changed:
        changed = False
        for agent_id, cell in targets.items():
            if agent_id in blocked:
                continue
            other = position_of.get(cell)
            if other is None or other == agent_id:
                continue
            if other not in targets or other in blocked:
                blocked.add(agent_id)
                changed = True

    for agent_id, cell in targets.items():
        if agent_id not in blocked:
            state.positions[agent_id] = cell


def _collect_coin(
    state: EnvState, movers: List[str], rewards: Dict[str, float], events: List[Event]
) -> None:
    coin = state.coin
    if coin is None:
        return
    config = state.config
    collector = next((a for a in movers if state.positions[a] == coin.position), None)
    if collector is None:
        return
    spec = config.agent(collector)
    gain = 1.0 * spec.reward_multiplier
    rewards[collector] += gain
    state.coin = None
    t = state.t
    if coin.color == collector:
        events.append(Event(t, collector, EventKind.OWN_COIN, gain, collector))
        return

    owner = coin.color
    rewards[owner] -= spec.mismatch_penalty
    events.append(Event(t, collector, EventKind.MISMATCH_COIN, gain, owner))
    events.append(Event(t, owner, EventKind.PENALTY, -spec.mismatch_penalty, collector))

    biased: Optional[AgentSpec] = None
    if config.spawn_bias_trigger == "self" and spec.is_spawn_biased:
        biased = spec
    elif config.spawn_bias_trigger == "other" and config.agent(owner).is_spawn_biased:
        biased = config.agent(owner)
    if biased is not None:
        state.bias_timer = biased.spawn_bias_steps
        state.bias_color = biased.agent_id
        steps = float(biased.spawn_bias_steps)
        events.append(Event(t, biased.agent_id, EventKind.SPAWN_BIAS, steps))


def _collect_apples(
    state: EnvState, movers: List[str], rewards: Dict[str, float], events: List[Event]
) -> None:
    apples = state.apples
    assert apples is not None
    for agent_id in movers:
        x, y = state.positions[agent_id]  # type: ignore[misc]
        if apples[y, x]:
            apples[y, x] = False
            gain = 1.0 * state.config.agent(agent_id).reward_multiplier
            rewards[agent_id] += gain
            events.append(Event(state.t, agent_id, EventKind.APPLE, gain))


def _occupied(state: EnvState) -> Set[Cell]:
    return {p for p in state.positions.values() if p is not None}


def _respawn(state: EnvState, agent_id: str) -> None:
    config = state.config
    occupied = _occupied(state)
    free = [
        (x, y)
        for y in range(config.height)
        for x in range(config.width)
        if (x, y) not in occupied
        and (state.apples is None or not state.apples[y, x])
        and (state.coin is None or state.coin.position != (x, y))
    ]
    if not free:
        free = [
            (x, y)
            for y in range(config.height)
            for x in range(config.width)
            if (x, y) not in occupied
        ]
    state.positions[agent_id] = free[int(state.rng.integers(len(free)))]
    state.orientations[agent_id] = Orientation.NORTH


def _advance_coins(state: EnvState) -> None:
    config = state.config
    if state.coin is not None:
        state.coin.age += 1
        if state.coin.age >= config.coin_lifetime:
            state.coin = None

    if state.coin is None:
        draw = state.rng.random()
        color_draw = int(state.rng.integers(len(config.agents)))
        if draw < config.coin_spawn_prob:
            occupied = _occupied(state)
            free = [
                (x, y)
                for y in range(config.height)
                for x in range(config.width)
                if (x, y) not in occupied
            ]
            if free:
                position = free[int(state.rng.integers(len(free)))]
                if state.bias_timer > 0 and state.bias_color is not None:
                    color = state.bias_color
                else:
                    color = config.agent_ids[color_draw]
                state.coin = Coin(color=color, position=position)

    if state.bias_timer > 0:
        state.bias_timer -= 1
        if state.bias_timer == 0:
            state.bias_color = None


def neighbor_counts(apples: np.ndarray, radius: int) -> np.ndarray:
    """Apples within Manhattan distance `radius` of each cell, excluding the cell."""
    height, width = apples.shape
    padded = np.pad(apples.astype(np.int32), radius)
    counts = np.zeros((height, width), dtype=np.int32)
    for dy in range(-radius, radius + 1):
        for dx in range(-radius, radius + 1):
            if (dx, dy) == (0, 0) or abs(dx) + abs(dy) > radius:
                continue
            counts += padded[radius + dy : radius + dy + height, radius + dx : radius + dx + width]
    return counts


def _regrow_apples(state: EnvState) -> None:
    config = state.config
    apples = state.apples
    assert apples is not None
    sites = config.apple_sites()
    draws = state.rng.random(len(sites))
    counts = neighbor_counts(apples, config.regrowth_radius)
    probs = config.regrowth_probs
    occupied = _occupied(state)
    grown = []
    for (x, y), draw in zip(sites, draws):
        if apples[y, x] or (x, y) in occupied:
            continue
        p = probs[min(int(counts[y, x]), len(probs) - 1)]
        if draw < p:
            grown.append((x, y))
    for x, y in grown:
        apples[y, x] = True


def _base_grid(state: EnvState, observer: str) -> np.ndarray:
    config = state.config
    grid = np.full((config.height, config.width), int(CellKind.EMPTY), dtype=np.int16)
    if state.apples is not None:
        grid[state.apples] = int(CellKind.APPLE)
    if state.coin is not None:
        x, y = state.coin.position
        grid[y, x] = int(CellKind.COIN_OWN if state.coin.color == observer else CellKind.COIN_OTHER)
    for spec in config.agents:
        position = state.positions[spec.agent_id]
        if position is None or not state.is_active(spec.agent_id):
            continue
        x, y = position
        if spec.agent_id == observer:
            grid[y, x] = int(CellKind.SELF)
        else:
            grid[y, x] = agent_cell(spec.agent_type)
    return grid


def _check_agent(state: EnvState, agent_id: str) -> None:
    if agent_id not in state.positions:
        raise KeyError(f"unknown agent id: {agent_id}")


def visible_agents(state: EnvState, agent_id: str) -> FrozenSet[str]:
    """Active agents inside the observer's window, excluding the observer."""
    _check_agent(state, agent_id)
    if not state.is_active(agent_id):
        return frozenset()
    x, y = state.positions[agent_id]  # type: ignore[misc]
    r = state.config.view_radius
    seen = set()
    for other in state.config.agent_ids:
        if other == agent_id or not state.is_active(other):
            continue
        ox, oy = state.positions[other]  # type: ignore[misc]
        if abs(ox - x) <= r and abs(oy - y) <= r:
            seen.add(other)
    return frozenset(seen)


def observe(state: EnvState, agent_id: str) -> Observation:
    """Render an agent's symbolic window; outside the grid reads as wall."""
    _check_agent(state, agent_id)
    config = state.config
    r = config.view_radius
    size = 2 * r + 1
    spec = config.agent(agent_id)
    if not state.is_active(agent_id):
        return Observation(
            agent_id=agent_id,
            window=np.zeros((size, size), dtype=np.int16),
            orientation=state.orientations[agent_id],
            timed_out=True,
            visible=frozenset(),
            environment=config.environment,
            beam_length=config.beam_length,
            beam_width=spec.zap_width,
        )

    x, y = state.positions[agent_id]  # type: ignore[misc]
    grid = _base_grid(state, agent_id)
    window = np.full((size, size), int(CellKind.WALL), dtype=np.int16)
    x0, x1 = max(0, x - r), min(config.width, x + r + 1)
    y0, y1 = max(0, y - r), min(config.height, y + r + 1)
    window[y0 - (y - r) : y1 - (y - r), x0 - (x - r) : x1 - (x - r)] = grid[y0:y1, x0:x1]
    return Observation(
        agent_id=agent_id,
        window=window,
        orientation=state.orientations[agent_id],
        timed_out=False,
        visible=visible_agents(state, agent_id),
        environment=config.environment,
        beam_length=config.beam_length,
        beam_width=spec.zap_width,
    )


def new_event_log(config: EnvConfig) -> EventLog:
    """Empty event log for an episode of this config."""
    return EventLog(
        environment=config.environment,
        agent_types={spec.agent_id: spec.agent_type.value for spec in config.agents},
    )


def write_events_csv(log: EventLog, path: Union[str, Path]) -> Path:
    """Write `t,agent,event_kind,value,counterparty` rows."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(EVENT_CSV_COLUMNS)
        for event in log.events:
            writer.writerow(
                [
                    event.t,
                    event.agent,
                    event.kind.value,
                    repr(event.value),
                    event.counterparty or "",
                ]
            )
    return path


class EpisodeRecord(BaseModel):
    """Everything needed to re-simulate an episode bit-exactly."""

    config: EnvConfig
    seed: int
    actions: List[Dict[str, Action]] = []

    def save(self, path: Union[str, Path]) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.model_dump_json(indent=2))
        return path

    @classmethod
    def load(cls, path: Union[str, Path]) -> "EpisodeRecord":
        return cls.model_validate_json(Path(path).read_text())


def replay_episode(record: EpisodeRecord) -> Tuple[EnvState, EventLog]:
    """Re-simulate a recorded episode."""
    state = reset(record.config, record.seed)
    log = new_event_log(record.config)
    for joint_action in record.actions:
        result = step(state, joint_action)
        state = result.state
        log.extend(result.events)
    log.episode_length = state.t
    return state, log
