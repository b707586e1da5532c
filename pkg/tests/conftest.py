"""Shared fixtures."""

from pathlib import Path
from typing import Dict, Optional, Tuple

import pytest

from ssdlab.core.gridworld import Coin, EnvState, reset
from ssdlab.models.agents import AgentSpec, AgentType
from ssdlab.models.environment import EnvConfig, Environment, Orientation
from ssdlab.models.learning import LearnerConfig

ROOT = Path(__file__).resolve().parent.parent
GAMES = ROOT / "games"
CONFIGS = ROOT / "configs"


def place(
    config: EnvConfig,
    positions: Dict[str, Tuple[int, int]],
    orientations: Dict[str, Orientation],
    coin: Optional[Coin] = None,
    seed: int = 0,
) -> EnvState:
    """A freshly reset state with agents moved to fixed cells."""
    state = reset(config, seed)
    state.positions = dict(positions)
    state.orientations = dict(orientations)
    state.coin = coin
    return state


@pytest.fixture
def coins_env() -> EnvConfig:
    """Symmetric Coins with two standard agents."""
    return EnvConfig.preset(Environment.COINS)


@pytest.fixture
def small_harvest_env() -> EnvConfig:
    """7x5 Harvest map with a single apple site at (5, 2)."""
    return EnvConfig(
        environment=Environment.HARVEST,
        width=7,
        height=5,
        view_radius=2,
        apple_patch_centers=[(5, 2)],
        apple_patch_radius=0,
        agents=[
            AgentSpec.for_type("a", AgentType.STANDARD),
            AgentSpec.for_type("b", AgentType.STANDARD),
        ],
    )


@pytest.fixture
def tiny_learner() -> LearnerConfig:
    return LearnerConfig(
        training_steps=60,
        eval_period=30,
        eval_episodes=1,
        episode_length=20,
    )
