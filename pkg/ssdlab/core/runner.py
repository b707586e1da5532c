"""Episode loop shared by scripted sweeps, training and evaluation."""

import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional

from ssdlab.core.estimates import (
    EstimateTable,
    average_range,
    estimate_age_total,
    init_tables,
    propagate,
)
from ssdlab.core.gridworld import EnvState, new_event_log, observe, reset, step, visible_agents
from ssdlab.core.metrics import PeaceScope, compute_episode_metrics
from ssdlab.core.shaping import (
    ShapingAudit,
    SmoothedTracker,
    comparison_values,
    shape_rewards,
    update_smoothed,
)
from ssdlab.models.environment import Action, EnvConfig, EventLog, Observation
from ssdlab.models.metrics import EpisodeMetrics
from ssdlab.models.shaping import ShapingConfig

logger = logging.getLogger(__name__)

ActFn = Callable[[str, Observation, int], Action]


@dataclass
class Transition:
    """What one agent experienced during one step."""

    agent_id: str
    observation: Observation
    action: Action
    extrinsic: float
    shaped: float
    next_observation: Observation
    terminal: bool


LearnFn = Callable[[Transition], None]
StepFn = Callable[[int], None]


@dataclass
class EpisodeOutcome:
    """Result of running one episode."""

    state: EnvState
    log: EventLog
    metrics: EpisodeMetrics
    trackers: Dict[str, SmoothedTracker]
    tables: Optional[Dict[str, EstimateTable]] = None
    steps: int = 0
    table_history: List[Dict[str, EstimateTable]] = field(default_factory=list)


class EpisodeRunner:
    """Drive one environment config through whole episodes.

    Each step runs observe, act, env step, smoothing, estimate propagation
    (local shaping only), shaping and finally the learn callback.
    """

    def __init__(
        self,
        env: EnvConfig,
        shaping: Optional[ShapingConfig] = None,
        peace_scope: PeaceScope = "subgroup",
        keep_table_history: bool = False,
    ) -> None:
        self.env = env
        self.shaping = shaping or ShapingConfig()
        self.peace_scope = peace_scope
        self.keep_table_history = keep_table_history

    def run(
        self,
        seed: int,
        act: ActFn,
        learn: Optional[LearnFn] = None,
        max_steps: Optional[int] = None,
        audit: Optional[ShapingAudit] = None,
        on_step: Optional[StepFn] = None,
    ) -> EpisodeOutcome:
        """Play one episode from `reset(env, seed)`.

        `on_step` is called with the new time step after every step, once the
        learn callbacks for that step have run.
        """
        env = self.env
        shaping = self.shaping
        horizon = env.episode_length if max_steps is None else min(max_steps, env.episode_length)
        ids = env.agent_ids

        state = reset(env, seed)
        log = new_event_log(env)
        trackers = {agent_id: SmoothedTracker() for agent_id in ids}
        track_estimates = shaping.local
        tables = init_tables(ids) if track_estimates else None
        history = [tables] if tables is not None and self.keep_table_history else []
        age_total = 0

        observations = {agent_id: observe(state, agent_id) for agent_id in ids}
        logger.debug("episode start seed=%d horizon=%d", seed, horizon)
        for _ in range(horizon):
            t = state.t
            active = {agent_id: not observations[agent_id].timed_out for agent_id in ids}
            actions = {
                agent_id: (
                    act(agent_id, observations[agent_id], t) if active[agent_id] else Action.STAY
                )
                for agent_id in ids
            }
            result = step(state, actions)
            state = result.state
            log.extend(result.events)

            trackers = {
                agent_id: update_smoothed(
                    trackers[agent_id], result.rewards[agent_id], shaping.gamma, shaping.lambda_
                )
                for agent_id in ids
            }
            if tables is not None:
                normalized = {agent_id: tracker.e_hat for agent_id, tracker in trackers.items()}
                visibility = {agent_id: visible_agents(state, agent_id) for agent_id in ids}
                tables = propagate(tables, visibility, normalized, state.t)
                age_total += estimate_age_total(tables, state.t)
                if self.keep_table_history:
                    history.append(tables)

            shaped = shape_rewards(
                shaping, env.agents, result.rewards, comparison_values(shaping, trackers), tables
            )
            if audit is not None:
                audit.record(t, result.rewards, shaped)

            next_observations = {agent_id: observe(state, agent_id) for agent_id in ids}
            if learn is not None:
                terminal = state.t >= env.episode_length
                for agent_id in ids:
                    if not active[agent_id]:
                        continue
                    learn(
                        Transition(
                            agent_id=agent_id,
                            observation=observations[agent_id],
                            action=actions[agent_id],
                            extrinsic=result.rewards[agent_id],
                            shaped=shaped.shaped[agent_id],
                            next_observation=next_observations[agent_id],
                            terminal=terminal,
                        )
                    )
            observations = next_observations
            if on_step is not None:
                on_step(state.t)

        log.episode_length = state.t
        average_age = None
        if tables is not None and state.t >= 1:
            average_age = age_total / (len(ids) * state.t)
        metrics = compute_episode_metrics(
            log,
            average_age=average_age,
            average_range=average_range(trackers.values()),
            peace_scope=self.peace_scope,
        )
        logger.debug("episode end seed=%d return=%.3f", seed, metrics.overall.average_return)
        return EpisodeOutcome(
            state=state,
            log=log,
            metrics=metrics,
            trackers=trackers,
            tables=tables,
            steps=state.t,
            table_history=history,
        )
