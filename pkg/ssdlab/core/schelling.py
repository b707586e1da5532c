"""Scripted-policy sweeps producing empirical Schelling diagrams."""

import itertools
import logging
from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from ssdlab.core.dilemma import build_schelling_diagram, verify_empirical_dilemma
from ssdlab.core.policies import scripted_policy
from ssdlab.core.runner import EpisodeRunner
from ssdlab.models.environment import Action, EnvConfig, Observation
from ssdlab.models.game import EmpiricalReport, SchellingDiagram, SchellingSample, Strategy

logger = logging.getLogger(__name__)

Assignment = Tuple[Strategy, ...]

# beyond this many agents only one assignment per cooperator count is sampled
EXHAUSTIVE_LIMIT = 6


@dataclass
class SweepResult:
    """Samples, diagram and verdict of one sweep."""

    samples: List[SchellingSample]
    diagram: SchellingDiagram
    report: EmpiricalReport


def all_assignments(n_agents: int) -> List[Assignment]:
    """Every cooperate/defect role assignment over the agents."""
    return [tuple(roles) for roles in itertools.product(list(Strategy), repeat=n_agents)]


def count_assignments(n_agents: int, rng: np.random.Generator) -> List[Assignment]:
    """One random assignment for each number of cooperators 0..N."""
    assignments = []
    for cooperators in range(n_agents + 1):
        chosen = set(rng.permutation(n_agents)[:cooperators].tolist())
        assignments.append(
            tuple(Strategy.COOPERATE if i in chosen else Strategy.DEFECT for i in range(n_agents))
        )
    return assignments


def run_assignment(
    runner: EpisodeRunner,
    roles: Assignment,
    episode_seed: int,
) -> List[SchellingSample]:
    """One scripted episode; each agent yields a sample keyed by the other cooperators."""
    env = runner.env
    ids = env.agent_ids
    role_of = dict(zip(ids, roles))
    rngs = {
        agent_id: np.random.default_rng([episode_seed, 1000 + i]) for i, agent_id in enumerate(ids)
    }

    def act(agent_id: str, obs: Observation, t: int) -> Action:
        return scripted_policy(role_of[agent_id], obs, rngs[agent_id], env.cooperate_min_neighbors)

    outcome = runner.run(episode_seed, act)
    cooperators = sum(1 for role in roles if role == Strategy.COOPERATE)
    samples = []
    for agent_id in ids:
        own = 1 if role_of[agent_id] == Strategy.COOPERATE else 0
        samples.append(
            SchellingSample(
                agent_type=env.agent(agent_id).agent_type.value,
                strategy=role_of[agent_id],
                k=cooperators - own,
                episode_return=outcome.metrics.agents[agent_id].episode_return,
            )
        )
    return samples


def schelling_sweep(
    env: EnvConfig,
    seeds: Sequence[int],
    episodes: int,
    assignments: Optional[Iterable[Assignment]] = None,
    exhaustive: Optional[bool] = None,
) -> SweepResult:
    """Run scripted episodes for each role assignment and seed, then verify the diagram."""
    n_agents = len(env.agents)
    runner = EpisodeRunner(env)
    if exhaustive is None:
        exhaustive = n_agents <= EXHAUSTIVE_LIMIT
    fixed = list(assignments) if assignments is not None else None

    samples: List[SchellingSample] = []
    for seed in seeds:
        if fixed is not None:
            cells = fixed
        elif exhaustive:
            cells = all_assignments(n_agents)
        else:
            cells = count_assignments(n_agents, np.random.default_rng([seed, 7]))
        for index, roles in enumerate(cells):
            if len(roles) != n_agents:
                raise ValueError(f"assignment {roles} does not cover {n_agents} agents")
            episode_seeds = np.random.default_rng([seed, index]).integers(2**31, size=episodes)
            for episode_seed in episode_seeds:
                samples.extend(run_assignment(runner, roles, int(episode_seed)))
        logger.info("schelling sweep: seed %d done (%d samples)", seed, len(samples))

    diagram = build_schelling_diagram(samples, n_agents=n_agents)
    return SweepResult(samples=samples, diagram=diagram, report=verify_empirical_dilemma(diagram))


def type_curves(
    diagram: SchellingDiagram, strategy: Strategy
) -> Dict[str, List[Tuple[int, float]]]:
    """(k, mean return) points per agent type for one strategy."""
    curves: Dict[str, List[Tuple[int, float]]] = {}
    for cell in diagram.cells:
        if cell.strategy == strategy:
            curves.setdefault(cell.agent_type, []).append((cell.k, cell.mean_return))
    return curves
