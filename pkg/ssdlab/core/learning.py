"""Tabular independent Q-learning over symbolic observations."""

import csv
import hashlib
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from ssdlab.core.errors import ConfigurationError
from ssdlab.core.metrics import PeaceScope, average_metrics
from ssdlab.core.runner import EpisodeRunner, Transition
from ssdlab.core.shaping import ShapingAudit
from ssdlab.models.environment import Action, EnvConfig, Observation
from ssdlab.models.learning import LearnerConfig
from ssdlab.models.metrics import EpisodeMetrics
from ssdlab.models.shaping import ShapingConfig

logger = logging.getLogger(__name__)

TRAINING_LOG_COLUMNS = ["eval_step", "seed", "agent", "agent_type", "metric", "value"]

# offsets of the per-run random streams derived from the master seed
EPISODE_SEED_STREAM = 0
EVAL_SEED_STREAM = 1
AGENT_STREAM_BASE = 1000
EVAL_AGENT_STREAM_BASE = 2000


class QTable:
    """Action values keyed by observation; unvisited keys read as zeros."""

    def __init__(self, actions: Sequence[Action]) -> None:
        self.actions: Tuple[Action, ...] = tuple(actions)
        self.values: Dict[str, np.ndarray] = {}
        self.visits: Dict[str, int] = {}

    def __len__(self) -> int:
        return len(self.values)

    def get(self, key: str) -> np.ndarray:
        row = self.values.get(key)
        if row is None:
            return np.zeros(len(self.actions))
        return row

    def row(self, key: str) -> np.ndarray:
        if key not in self.values:
            self.values[key] = np.zeros(len(self.actions))
            self.visits[key] = 0
        return self.values[key]

    def index(self, action: Action) -> int:
        return self.actions.index(Action(action))

    def to_dict(self) -> dict:
        return {
            "actions": [a.value for a in self.actions],
            "values": {key: [float(v) for v in row] for key, row in self.values.items()},
            "visits": dict(self.visits),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "QTable":
        table = cls([Action(a) for a in data["actions"]])
        table.values = {key: np.array(row, dtype=float) for key, row in data["values"].items()}
        table.visits = {key: int(count) for key, count in data["visits"].items()}
        return table

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, QTable):
            return NotImplemented
        return (
            self.actions == other.actions
            and self.visits == other.visits
            and self.values.keys() == other.values.keys()
            and all(np.array_equal(self.values[k], other.values[k]) for k in self.values)
        )


def encode_observation(obs: Observation) -> str:
    """Stable key over window contents, orientation and the timeout flag."""
    digest = hashlib.sha256()
    digest.update(f"{obs.environment.value}|{int(obs.orientation)}|{int(obs.timed_out)}|".encode())
    digest.update(repr(obs.window.shape).encode())
    digest.update(np.ascontiguousarray(obs.window, dtype=np.int16).tobytes())
    return digest.hexdigest()


def select_action(q: QTable, key: str, epsilon: float, rng: np.random.Generator) -> Action:
    """Epsilon-greedy choice; ties between maximal actions are broken uniformly."""
    if not 0.0 <= epsilon <= 1.0:
        raise ConfigurationError(f"epsilon must lie in [0, 1], got {epsilon}")
    if rng.random() < epsilon:
        return q.actions[int(rng.integers(len(q.actions)))]
    values = q.get(key)
    best = np.flatnonzero(values == values.max())
    return q.actions[int(best[int(rng.integers(len(best)))])]


def q_update(
    q: QTable,
    key: str,
    action: Action,
    reward: float,
    next_key: str,
    terminal: bool,
    lr: float,
    gamma: float,
) -> QTable:
    """One-step Q-learning backup, in place."""
    if not math.isfinite(reward):
        raise ValueError(f"reward must be finite, got {reward}")
    if not 0.0 < lr <= 1.0:
        raise ConfigurationError(f"learning rate must lie in (0, 1], got {lr}")
    bootstrap = 0.0 if terminal else gamma * float(q.get(next_key).max())
    row = q.row(key)
    index = q.index(action)
    row[index] += lr * (reward + bootstrap - row[index])
    q.visits[key] += 1
    return q


@dataclass(frozen=True)
class EpsilonSchedule:
    """Linear decay from start to end, constant afterwards."""

    start: float
    end: float
    decay_steps: int

    def value(self, step: int) -> float:
        if self.decay_steps <= 0 or step >= self.decay_steps:
            return self.end
        return self.start + (self.end - self.start) * (step / self.decay_steps)

    @classmethod
    def from_config(cls, config: LearnerConfig) -> "EpsilonSchedule":
        return cls(config.epsilon_start, config.epsilon_end, config.decay_steps)


@dataclass
class TrainingLog:
    """Evaluation history of one training run."""

    seed: int
    agent_types: Dict[str, str]
    evaluations: List[Tuple[int, EpisodeMetrics]] = field(default_factory=list)
    episode_lengths: List[int] = field(default_factory=list)
    q_tables: Dict[str, QTable] = field(default_factory=dict)

    def rows(self) -> List[Tuple[int, int, str, str, str, float]]:
        rows: List[Tuple[int, int, str, str, str, float]] = []
        for eval_step, metrics in self.evaluations:
            for agent_id, agent_metrics in metrics.agents.items():
                agent_type = self.agent_types[agent_id]
                for name, value in agent_metrics.model_dump(exclude={"agent_type"}).items():
                    if value is not None:
                        row = (eval_step, self.seed, agent_id, agent_type, name, float(value))
                        rows.append(row)
        return rows

    def write_csv(self, path: Union[str, Path]) -> Path:
        """Write `eval_step,seed,agent,agent_type,metric,value` rows."""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", newline="") as handle:
            writer = csv.writer(handle)
            writer.writerow(TRAINING_LOG_COLUMNS)
            for eval_step, seed, agent_id, agent_type, metric, value in self.rows():
                writer.writerow([eval_step, seed, agent_id, agent_type, metric, repr(value)])
        return path


def evaluate(
    runner: EpisodeRunner,
    q_tables: Dict[str, QTable],
    epsilon: float,
    seed: int,
    eval_index: int,
    episodes: int,
) -> EpisodeMetrics:
    """Average metrics of near-greedy play without learning."""
    ids = runner.env.agent_ids
    seed_stream = np.random.default_rng([seed, EVAL_SEED_STREAM, eval_index])
    seeds = seed_stream.integers(2**31, size=episodes)
    rngs = {
        agent_id: np.random.default_rng([seed, EVAL_AGENT_STREAM_BASE + index, eval_index])
        for index, agent_id in enumerate(ids)
    }

    def act(agent_id: str, obs: Observation, t: int) -> Action:
        return select_action(q_tables[agent_id], encode_observation(obs), epsilon, rngs[agent_id])

    return average_metrics([runner.run(int(s), act).metrics for s in seeds])


def train(
    env: EnvConfig,
    shaping: ShapingConfig,
    learner: LearnerConfig,
    seed: Optional[int] = None,
    audit: Optional[ShapingAudit] = None,
    peace_scope: PeaceScope = "subgroup",
) -> TrainingLog:
    """Train one independent Q-learner per agent on the shaped reward.

    Reproducible from (configs, seed): episode seeds come from a dedicated
    stream of the master seed and every agent owns its own action stream.
    Evaluations pause the running training episode, which then resumes
    where it stopped.
    """
    seed = learner.seed if seed is None else seed
    if shaping.local and len(env.agents) < 2:
        raise ConfigurationError("local shaping needs at least 2 agents")
    if learner.episode_length:
        env = env.model_copy(update={"episode_length": learner.episode_length})

    ids = env.agent_ids
    runner = EpisodeRunner(env, shaping, peace_scope=peace_scope)
    q_tables = {agent_id: QTable(env.actions) for agent_id in ids}
    agent_rngs = {
        agent_id: np.random.default_rng([seed, AGENT_STREAM_BASE + index])
        for index, agent_id in enumerate(ids)
    }
    episode_seeds = np.random.default_rng([seed, EPISODE_SEED_STREAM])
    schedule = EpsilonSchedule.from_config(learner)
    log = TrainingLog(
        seed=seed,
        agent_types={spec.agent_id: spec.agent_type.value for spec in env.agents},
        q_tables=q_tables,
    )

    def run_evaluation(eval_step: int) -> None:
        metrics = evaluate(
            runner,
            q_tables,
            learner.eval_epsilon,
            seed,
            len(log.evaluations),
            learner.eval_episodes,
        )
        log.evaluations.append((eval_step, metrics))
        logger.info(
            "seed %d step %d: average return %.3f", seed, eval_step, metrics.overall.average_return
        )

    run_evaluation(0)
    done = 0
    next_eval = learner.eval_period

    def count_step(t: int) -> None:
        nonlocal done, next_eval
        done += 1
        if done >= next_eval:
            run_evaluation(done)
            next_eval += learner.eval_period

    def learn(transition: Transition) -> None:
        q_update(
            q_tables[transition.agent_id],
            encode_observation(transition.observation),
            transition.action,
            transition.shaped,
            encode_observation(transition.next_observation),
            transition.terminal,
            learner.learning_rate,
            learner.gamma,
        )

    def exploring(offset: int) -> Callable[[str, Observation, int], Action]:
        def act(agent_id: str, obs: Observation, t: int) -> Action:
            epsilon = schedule.value(offset + t)
            key = encode_observation(obs)
            return select_action(q_tables[agent_id], key, epsilon, agent_rngs[agent_id])

        return act

    while done < learner.training_steps:
        episode_seed = int(episode_seeds.integers(2**31))
        outcome = runner.run(
            episode_seed,
            exploring(done),
            learn,
            max_steps=learner.training_steps - done,
            audit=audit,
            on_step=count_step,
        )
        log.episode_lengths.append(outcome.steps)

    if log.evaluations[-1][0] != done:
        run_evaluation(done)
    return log
