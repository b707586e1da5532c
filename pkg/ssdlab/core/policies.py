"""Scripted cooperate/defect policies used for Schelling sweeps."""

from typing import List, Optional, Set, Tuple

import numpy as np

from ssdlab.core.gridworld import beam_cells
from ssdlab.models.environment import (
    Action,
    CellKind,
    Environment,
    Observation,
    Orientation,
    is_agent_cell,
)
from ssdlab.models.game import Strategy

Offset = Tuple[int, int]

# tried in this order when two directions reduce the distance equally
DIRECTION_PRIORITY = (Orientation.NORTH, Orientation.EAST, Orientation.SOUTH, Orientation.WEST)

WANDER_FORWARD_PROB = 0.7


def scripted_policy(
    role: Strategy,
    obs: Observation,
    rng: np.random.Generator,
    min_neighbors: int = 3,
) -> Action:
    """Greedy item seeker with a role-dependent action mask.

    Cooperators in Coins only chase their own coins; in Harvest they never
    zap and skip apples with fewer than `min_neighbors` neighbouring apples.
    Defectors chase the nearest item of any kind. In Harvest they zap an
    agent standing in the beam, but only while no apple is in view.
    """
    role = Strategy(role)
    if obs.timed_out:
        return Action.STAY

    targets, masked = _targets(role, obs, min_neighbors)
    if not targets:
        harvest = obs.environment == Environment.HARVEST
        if harvest and role == Strategy.DEFECT and _agent_in_beam(obs):
            return Action.ZAP
        return _wander(obs, rng, masked)

    best = min(abs(dx) + abs(dy) for dx, dy in targets)
    nearest = [offset for offset in targets if abs(offset[0]) + abs(offset[1]) == best]
    target = nearest[int(rng.integers(len(nearest)))] if len(nearest) > 1 else nearest[0]
    return _steer(obs, target, rng, masked)


def _targets(
    role: Strategy, obs: Observation, min_neighbors: int
) -> Tuple[List[Offset], Set[Offset]]:
    r = obs.radius
    targets: List[Offset] = []
    masked: Set[Offset] = set()
    for dy in range(-r, r + 1):
        for dx in range(-r, r + 1):
            code = obs.at(dx, dy)
            if obs.environment == Environment.COINS:
                if code == CellKind.COIN_OWN:
                    targets.append((dx, dy))
                elif code == CellKind.COIN_OTHER:
                    if role == Strategy.DEFECT:
                        targets.append((dx, dy))
                    else:
                        masked.add((dx, dy))
            elif code == CellKind.APPLE:
                if role == Strategy.DEFECT or apple_neighbors(obs, dx, dy) >= min_neighbors:
                    targets.append((dx, dy))
                else:
                    masked.add((dx, dy))
    return targets, masked


def apple_neighbors(obs: Observation, dx: int, dy: int, radius: int = 2) -> int:
    """Apples within Manhattan `radius` of a window cell, excluding it."""
    count = 0
    for ny in range(-radius, radius + 1):
        for nx in range(-radius, radius + 1):
            if (nx, ny) == (0, 0) or abs(nx) + abs(ny) > radius:
                continue
            if obs.at(dx + nx, dy + ny) == CellKind.APPLE:
                count += 1
    return count


def _agent_in_beam(obs: Observation) -> bool:
    for cell in beam_cells((0, 0), obs.orientation, obs.beam_length, obs.beam_width):
        if is_agent_cell(obs.at(*cell)):
            return True
    return False


def _forward_cell(obs: Observation) -> Offset:
    return obs.orientation.delta


def _steer(
    obs: Observation, target: Offset, rng: np.random.Generator, masked: Set[Offset]
) -> Action:
    tx, ty = target
    fx, fy = _forward_cell(obs)
    if fx * tx > 0 or fy * ty > 0:
        if (fx, fy) in masked:
            return _wander(obs, rng, masked)
        return Action.FORWARD

    desired = _desired_direction(tx, ty)
    if desired is None:
        return Action.STAY
    if desired == obs.orientation.left():
        return Action.TURN_LEFT
    return Action.TURN_RIGHT


def _desired_direction(tx: int, ty: int) -> Optional[Orientation]:
    candidates = []
    if ty < 0:
        candidates.append((abs(ty), Orientation.NORTH))
    if tx > 0:
        candidates.append((abs(tx), Orientation.EAST))
    if ty > 0:
        candidates.append((abs(ty), Orientation.SOUTH))
    if tx < 0:
        candidates.append((abs(tx), Orientation.WEST))
    if not candidates:
        return None
    candidates.sort(key=lambda item: (-item[0], DIRECTION_PRIORITY.index(item[1])))
    return candidates[0][1]


def _wander(obs: Observation, rng: np.random.Generator, masked: Set[Offset]) -> Action:
    """Random walk that never steps onto masked items or walls."""
    forward = _forward_cell(obs)
    draw = rng.random()
    if forward not in masked and obs.at(*forward) == CellKind.EMPTY and draw < WANDER_FORWARD_PROB:
        return Action.FORWARD
    return Action.TURN_LEFT if rng.random() < 0.5 else Action.TURN_RIGHT
