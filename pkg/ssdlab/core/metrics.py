"""Episode metrics computed from event logs.

Everything here works on extrinsic rewards only; shaped learning signals
never reach an event log.
"""

import csv
import logging
from collections import defaultdict
from pathlib import Path
from typing import (
    Dict,
    Iterable,
    List,
    Literal,
    Mapping,
    Optional,
    Sequence,
    Tuple,
    Type,
    TypeVar,
    Union,
)

import numpy as np
from pydantic import BaseModel

from ssdlab.core.errors import LogKindError
from ssdlab.models.environment import REWARD_EVENTS, Environment, EventKind, EventLog
from ssdlab.models.metrics import AgentMetrics, EpisodeMetrics, GroupMetrics

logger = logging.getLogger(__name__)

PeaceScope = Literal["subgroup", "global"]

METRICS_CSV_COLUMNS = ["eval_step", "seed", "scope", "name", "value"]
PLOT_CSV_COLUMNS = ["method", "eval_step", "scope", "name", "mean", "n_seeds"]


def episode_returns(log: EventLog) -> Tuple[Dict[str, float], float]:
    """Per-agent extrinsic return and the population mean."""
    returns = {agent_id: 0.0 for agent_id in log.agent_ids}
    for event in log.events:
        if event.kind in REWARD_EVENTS:
            returns[event.agent] += event.value
    mean = sum(returns.values()) / len(returns) if returns else 0.0
    return returns, mean


def proportion_own_coins(log: EventLog) -> Tuple[Dict[str, Optional[float]], Optional[float]]:
    """Share of own-colored coins among each agent's collections.

    Agents that collected nothing map to None and are left out of the mean.
    """
    if log.environment != Environment.COINS:
        raise LogKindError(f"proportion_own_coins needs a coins log, got {log.environment.value}")
    own: Dict[str, int] = defaultdict(int)
    total: Dict[str, int] = defaultdict(int)
    for event in log.of_kind(EventKind.OWN_COIN, EventKind.MISMATCH_COIN):
        total[event.agent] += 1
        if event.kind == EventKind.OWN_COIN:
            own[event.agent] += 1
    per_agent: Dict[str, Optional[float]] = {
        agent_id: own[agent_id] / total[agent_id] if total[agent_id] else None
        for agent_id in log.agent_ids
    }
    defined = [value for value in per_agent.values() if value is not None]
    if not defined:
        logger.debug("no coins collected; own-coin proportion undefined")
    return per_agent, (sum(defined) / len(defined) if defined else None)


def sustainability(log: EventLog, T: Optional[int] = None) -> Tuple[Dict[str, float], float]:
    """Mean step at which each agent earned positive reward, and their mean.

    An agent without any positive-reward step contributes T.
    """
    T = log.episode_length if T is None else T
    per_step: Dict[Tuple[str, int], float] = defaultdict(float)
    for event in log.events:
        if event.kind in REWARD_EVENTS:
            per_step[(event.agent, event.t)] += event.value
    steps: Dict[str, List[int]] = defaultdict(list)
    for (agent_id, t), reward in per_step.items():
        if reward > 0:
            steps[agent_id].append(t)
    per_agent = {
        agent_id: float(np.mean(steps[agent_id])) if steps[agent_id] else float(T)
        for agent_id in log.agent_ids
    }
    return per_agent, (sum(per_agent.values()) / len(per_agent) if per_agent else 0.0)


def timeout_steps(log: EventLog) -> Dict[str, int]:
    counts = {agent_id: 0 for agent_id in log.agent_ids}
    for event in log.of_kind(EventKind.TIMEOUT):
        counts[event.agent] += 1
    return counts


def peace(
    log: EventLog, T: Optional[int] = None, scope: PeaceScope = "subgroup"
) -> Tuple[float, Dict[str, float]]:
    """N minus the time-averaged number of timed-out agents, overall and per type.

    With `scope="subgroup"` a type's value is measured against its own head
    count; with `"global"` against the whole population.
    """
    if log.environment != Environment.HARVEST:
        raise LogKindError(f"peace needs a harvest log, got {log.environment.value}")
    T = log.episode_length if T is None else T
    if T <= 0:
        raise LogKindError("peace needs an episode length > 0")
    counts = timeout_steps(log)
    n = len(log.agent_ids)
    overall = n - sum(counts.values()) / T
    per_type: Dict[str, float] = {}
    for agent_type in dict.fromkeys(log.agent_types.values()):
        members = [a for a, t in log.agent_types.items() if t == agent_type]
        base = len(members) if scope == "subgroup" else n
        per_type[agent_type] = base - sum(counts[a] for a in members) / T
    return overall, per_type


def zap_counts(log: EventLog) -> Tuple[Dict[str, int], float]:
    """Successful zaps per shooter and their mean."""
    counts = {agent_id: 0 for agent_id in log.agent_ids}
    for event in log.of_kind(EventKind.ZAP):
        counts[event.agent] += 1
    return counts, (sum(counts.values()) / len(counts) if counts else 0.0)


def _mean_or_none(values: Sequence[Optional[float]]) -> Optional[float]:
    defined = [v for v in values if v is not None]
    return sum(defined) / len(defined) if defined else None


def compute_episode_metrics(
    log: EventLog,
    average_age: Optional[float] = None,
    average_range: Optional[float] = None,
    peace_scope: PeaceScope = "subgroup",
) -> EpisodeMetrics:
    """Assemble per-agent, per-type and overall metrics of one episode."""
    returns, mean_return = episode_returns(log)
    reward_time, sustain = sustainability(log)
    zaps, mean_zaps = zap_counts(log)
    timeouts = timeout_steps(log)
    coins = log.environment == Environment.COINS
    own, mean_own = proportion_own_coins(log) if coins else ({}, None)
    overall_peace, type_peace = peace(log, scope=peace_scope) if not coins else (None, {})

    agents = {
        agent_id: AgentMetrics(
            agent_type=log.agent_types[agent_id],
            episode_return=returns[agent_id],
            own_coin_proportion=own.get(agent_id),
            reward_time=reward_time[agent_id],
            timeout_steps=float(timeouts[agent_id]),
            zaps=float(zaps[agent_id]),
        )
        for agent_id in log.agent_ids
    }
    types: Dict[str, GroupMetrics] = {}
    for agent_type in dict.fromkeys(log.agent_types.values()):
        members = [agents[a] for a in log.agent_ids if log.agent_types[a] == agent_type]
        types[agent_type] = GroupMetrics(
            n_agents=len(members),
            average_return=sum(m.episode_return for m in members) / len(members),
            own_coin_proportion=_mean_or_none([m.own_coin_proportion for m in members]),
            sustainability=sum(m.reward_time for m in members) / len(members),
            peace=type_peace.get(agent_type),
            average_zaps=sum(m.zaps for m in members) / len(members),
        )
    overall = GroupMetrics(
        n_agents=len(agents),
        average_return=mean_return,
        own_coin_proportion=mean_own,
        sustainability=sustain,
        peace=overall_peace,
        average_zaps=mean_zaps,
    )
    return EpisodeMetrics(
        agents=agents,
        types=types,
        overall=overall,
        average_age=average_age,
        average_range=average_range,
    )


M = TypeVar("M", bound=BaseModel)


def _average_models(models: Sequence[M], cls: Type[M], keep: Iterable[str] = ()) -> M:
    dumps = [m.model_dump() for m in models]
    averaged = {}
    for name, value in dumps[0].items():
        if name in keep:
            averaged[name] = value
        else:
            averaged[name] = _mean_or_none([d[name] for d in dumps])
    return cls(**averaged)


def average_metrics(metrics: Sequence[EpisodeMetrics]) -> EpisodeMetrics:
    """Field-wise mean over episodes; undefined values are skipped."""
    if not metrics:
        raise ValueError("average_metrics needs at least one episode")
    if len(metrics) == 1:
        return metrics[0]
    first = metrics[0]
    return EpisodeMetrics(
        agents={
            agent_id: _average_models(
                [m.agents[agent_id] for m in metrics], AgentMetrics, keep=("agent_type",)
            )
            for agent_id in first.agents
        },
        types={
            agent_type: _average_models(
                [m.types[agent_type] for m in metrics], GroupMetrics, keep=("n_agents",)
            )
            for agent_type in first.types
        },
        overall=_average_models([m.overall for m in metrics], GroupMetrics, keep=("n_agents",)),
        average_age=_mean_or_none([m.average_age for m in metrics]),
        average_range=_mean_or_none([m.average_range for m in metrics]),
        episodes=sum(m.episodes for m in metrics),
    )


def write_metrics_csv(
    records: Iterable[Tuple[int, int, EpisodeMetrics]], path: Union[str, Path]
) -> Path:
    """Write `(eval_step, seed, metrics)` records as `eval_step,seed,scope,name,value`."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(METRICS_CSV_COLUMNS)
        for eval_step, seed, metrics in records:
            for scope, name, value in metrics.rows():
                writer.writerow([eval_step, seed, scope, name, repr(value)])
    return path


def read_metrics_csv(path: Union[str, Path]) -> List[Dict[str, str]]:
    with Path(path).open(newline="") as handle:
        return list(csv.DictReader(handle))


def emit_plot_data(
    rows_by_method: Mapping[str, Iterable[Mapping[str, str]]], path: Union[str, Path]
) -> Path:
    """Average metric rows across seeds, grouped by method, eval step and metric."""
    grouped: Dict[Tuple[str, int, str, str], List[float]] = defaultdict(list)
    for method, rows in rows_by_method.items():
        for row in rows:
            key = (method, int(row["eval_step"]), row["scope"], row["name"])
            grouped[key].append(float(row["value"]))

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(PLOT_CSV_COLUMNS)
        for (method, eval_step, scope, name) in sorted(grouped):
            values = grouped[(method, eval_step, scope, name)]
            mean = repr(float(np.mean(values)))
            writer.writerow([method, eval_step, scope, name, mean, len(values)])
    logger.info("wrote %d plot rows to %s", len(grouped), path)
    return path
