"""Temporal smoothing, normalization and fairness-based reward shaping."""

import csv
import logging
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import TYPE_CHECKING, Dict, List, Mapping, Optional, Sequence, Tuple, Union

from ssdlab.core.errors import ConfigurationError, EstimateError
from ssdlab.models.agents import AgentSpec
from ssdlab.models.shaping import ShapingConfig

if TYPE_CHECKING:
    from ssdlab.core.estimates import EstimateTable

logger = logging.getLogger(__name__)

NORMALIZE_EPS = 1e-8
NEUTRAL_ANGLE = 45.0

AUDIT_CSV_COLUMNS = ["t", "agent", "extrinsic", "penalty", "shaped"]


@dataclass(frozen=True)
class SmoothedTracker:
    """Smoothed reward of one agent with its running extrema over the episode."""

    e: float = 0.0
    e_min: float = math.inf
    e_max: float = -math.inf
    e_hat: float = 0.5
    updates: int = 0

    @property
    def range(self) -> float:
        return self.e_max - self.e_min if self.updates else 0.0


def update_smoothed(
    tracker: SmoothedTracker, r: float, gamma: float, lam: float
) -> SmoothedTracker:
    """Apply e' = gamma * lambda * e + r and refresh extrema and e_hat."""
    if not math.isfinite(r):
        raise ValueError(f"reward must be finite, got {r}")
    if not (0.0 <= gamma <= 1.0 and 0.0 <= lam <= 1.0):
        raise ConfigurationError(f"gamma and lambda must lie in [0, 1], got {gamma}, {lam}")
    e = gamma * lam * tracker.e + r
    updated = replace(
        tracker,
        e=e,
        e_min=min(tracker.e_min, e),
        e_max=max(tracker.e_max, e),
        updates=tracker.updates + 1,
    )
    return replace(updated, e_hat=normalize(updated))


def normalize(tracker: SmoothedTracker) -> float:
    """Position of e within its own history range; 0.5 while the range is degenerate."""
    span = tracker.e_max - tracker.e_min
    if tracker.updates == 0 or span < NORMALIZE_EPS:
        return 0.5
    return min(1.0, max(0.0, (tracker.e - tracker.e_min) / span))


def ia_penalty(
    e_i: float,
    others: Sequence[float],
    alpha: float,
    beta: float,
    n: Optional[int] = None,
) -> float:
    """Disadvantageous plus advantageous inequity of agent i."""
    n = len(others) + 1 if n is None else n
    if n < 2:
        raise ConfigurationError(f"inequity aversion needs at least 2 agents, got {n}")
    if len(others) != n - 1:
        raise ConfigurationError(f"expected {n - 1} comparison values, got {len(others)}")
    if alpha < 0 or beta < 0:
        raise ConfigurationError("alpha and beta must be >= 0")
    behind = math.fsum(max(e_j - e_i, 0.0) for e_j in others)
    ahead = math.fsum(max(e_i - e_j, 0.0) for e_j in others)
    return alpha / (n - 1) * behind + beta / (n - 1) * ahead


def ia_shape(
    r_i: float,
    e_i: float,
    others: Sequence[float],
    alpha: float,
    beta: float,
    n: Optional[int] = None,
) -> float:
    """Inequity-averse reward."""
    return r_i - ia_penalty(e_i, others, alpha, beta, n)


def _mean(values: Sequence[float]) -> float:
    if min(values) == max(values):
        return values[0]
    return math.fsum(values) / len(values)


def svo_angle(e_i: float, others: Sequence[float]) -> float:
    """Reward angle in degrees between own value and the mean of the others."""
    if not others:
        raise ConfigurationError("svo_angle needs at least one other agent")
    e_others = _mean(others)
    if e_others == e_i:
        return NEUTRAL_ANGLE
    return math.degrees(math.atan2(e_others, e_i))


def svo_penalty(theta: float, theta_svo: float, w: float) -> float:
    if w < 0:
        raise ConfigurationError(f"w must be >= 0, got {w}")
    return w * abs(theta_svo - theta)


def svo_shape(r_i: float, theta: float, theta_svo: float, w: float) -> float:
    """Reward penalized by the deviation from the target orientation."""
    return r_i - svo_penalty(theta, theta_svo, w)


@dataclass(frozen=True)
class EffectiveWeights:
    """Social weights of one agent after the drive modifier is applied."""

    phi: float
    alpha: float
    beta: float
    w: float


def effective_weights(config: ShapingConfig, agent: AgentSpec) -> EffectiveWeights:
    phi = config.phi.get(agent.agent_type.value, agent.phi)
    if phi < 0:
        raise ConfigurationError(f"{agent.agent_id}: phi must be >= 0, got {phi}")
    return EffectiveWeights(
        phi=phi, alpha=phi * config.alpha, beta=phi * config.beta, w=phi * config.w
    )


@dataclass
class ShapingResult:
    """Shaped learning signal and intrinsic penalty per agent."""

    shaped: Dict[str, float]
    penalty: Dict[str, float]


def comparison_values(
    config: ShapingConfig, trackers: Mapping[str, SmoothedTracker]
) -> Dict[str, float]:
    """Raw or normalized smoothed rewards, depending on the config."""
    if config.normalized:
        return {agent_id: tracker.e_hat for agent_id, tracker in trackers.items()}
    return {agent_id: tracker.e for agent_id, tracker in trackers.items()}


def shape_rewards(
    config: ShapingConfig,
    agents: Sequence[AgentSpec],
    rewards: Mapping[str, float],
    values: Mapping[str, float],
    tables: Optional[Mapping[str, "EstimateTable"]] = None,
) -> ShapingResult:
    """Shape every agent's extrinsic reward.

    With `local` set, agent i compares its own value against its estimate
    table entries instead of the other agents' true values.
    """
    order = [agent.agent_id for agent in agents]
    family = config.method.family
    if family is None:
        return ShapingResult(
            shaped={a: float(rewards[a]) for a in order},
            penalty={a: 0.0 for a in order},
        )
    if config.local and tables is None:
        raise EstimateError(f"{config.method.value} with local=true needs estimate tables")

    shaped: Dict[str, float] = {}
    penalty: Dict[str, float] = {}
    for agent in agents:
        i = agent.agent_id
        if config.local:
            assert tables is not None
            table = tables.get(i)
            if table is None:
                raise EstimateError(f"missing estimate table for {i}")
            others = [table.estimate(j) for j in order if j != i]
        else:
            others = [values[j] for j in order if j != i]

        weights = effective_weights(config, agent)
        if family == "ia":
            p = ia_penalty(values[i], others, weights.alpha, weights.beta, len(order))
        else:
            theta = svo_angle(values[i], others)
            p = svo_penalty(theta, config.theta_svo_deg, weights.w)
        penalty[i] = p
        shaped[i] = rewards[i] - p
    return ShapingResult(shaped=shaped, penalty=penalty)


@dataclass
class ShapingAudit:
    """Per-step record of extrinsic reward, penalty and shaped reward."""

    rows: List[Tuple[int, str, float, float, float]] = field(default_factory=list)

    def record(self, t: int, rewards: Mapping[str, float], result: ShapingResult) -> None:
        for agent_id, shaped in result.shaped.items():
            self.rows.append((t, agent_id, rewards[agent_id], result.penalty[agent_id], shaped))

    def write(self, path: Union[str, Path]) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", newline="") as handle:
            writer = csv.writer(handle)
            writer.writerow(AUDIT_CSV_COLUMNS)
            for t, agent_id, reward, penalty, shaped in self.rows:
                writer.writerow(
                    [t, agent_id, repr(float(reward)), repr(float(penalty)), repr(float(shaped))]
                )
        return path
