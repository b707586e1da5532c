"""Timestamped local estimates of other agents' normalized smoothed rewards.

Each agent keeps one entry per other agent: the last known normalized
smoothed reward and the step at which that value was observed. After every
step the tables are refreshed from the previous step's snapshot:

1. entries for agents the owner cannot see are replaced by the freshest
   entry held by any visible neighbour, if it is strictly newer;
2. the owner's own tracker is updated (done by the caller);
3. entries for visible agents are overwritten with their true value.
"""

import csv
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterable, List, Mapping, Sequence, Tuple, Union

from ssdlab.core.errors import EstimateError
from ssdlab.core.shaping import SmoothedTracker

logger = logging.getLogger(__name__)

INITIAL_ESTIMATE = 0.5
ESTIMATE_CSV_COLUMNS = ["t", "owner", "subject", "estimate", "tau"]

# t, owner, subject, estimate, tau
EstimateRow = Tuple[int, str, str, float, int]


@dataclass
class EstimateTable:
    """One agent's view of every other agent."""

    owner: str
    estimates: Dict[str, float] = field(default_factory=dict)
    taus: Dict[str, int] = field(default_factory=dict)

    @property
    def subjects(self) -> List[str]:
        return list(self.estimates)

    def estimate(self, subject: str) -> float:
        try:
            return self.estimates[subject]
        except KeyError:
            raise EstimateError(f"{self.owner} holds no estimate of {subject}") from None

    def tau(self, subject: str) -> int:
        return self.taus[subject]

    def age(self, subject: str, t: int) -> int:
        return t - self.taus[subject]

    def copy(self) -> "EstimateTable":
        return EstimateTable(self.owner, dict(self.estimates), dict(self.taus))


def init_tables(agent_ids: Sequence[str]) -> Dict[str, EstimateTable]:
    """Neutral tables at t=0: every estimate 0.5, observed at step 0."""
    agent_ids = list(agent_ids)
    if len(set(agent_ids)) != len(agent_ids):
        raise EstimateError(f"duplicate agent ids: {agent_ids}")
    return {
        owner: EstimateTable(
            owner=owner,
            estimates={j: INITIAL_ESTIMATE for j in agent_ids if j != owner},
            taus={j: 0 for j in agent_ids if j != owner},
        )
        for owner in agent_ids
    }


def _check_visibility(
    tables: Mapping[str, EstimateTable], visibility: Mapping[str, Iterable[str]]
) -> Dict[str, List[str]]:
    order = list(tables)
    checked: Dict[str, List[str]] = {}
    for owner, visible in visibility.items():
        if owner not in tables:
            raise EstimateError(f"visibility given for unknown agent {owner}")
        visible = set(visible)
        unknown = visible - set(order)
        if unknown:
            raise EstimateError(f"{owner} sees unknown agents {sorted(unknown)}")
        if owner in visible:
            raise EstimateError(f"visibility set of {owner} contains itself")
        # declared order breaks argmax ties
        checked[owner] = [j for j in order if j in visible]
    return checked


def propagate(
    tables: Mapping[str, EstimateTable],
    visibility: Mapping[str, Iterable[str]],
    own_normalized: Mapping[str, float],
    t: int,
) -> Dict[str, EstimateTable]:
    """Tables at step t from the snapshot at t-1.

    All reads go to `tables`, which is left untouched, so the result does
    not depend on the order agents are processed in.
    """
    visible = _check_visibility(tables, visibility)
    missing = set(tables) - set(own_normalized)
    if missing:
        raise EstimateError(f"missing normalized values for {sorted(missing)}")

    updated: Dict[str, EstimateTable] = {}
    for owner, table in tables.items():
        neighbours = visible.get(owner, [])
        new = table.copy()
        for subject in table.subjects:
            if subject in neighbours or not neighbours:
                continue
            source = max(neighbours, key=lambda j: (tables[j].tau(subject), -neighbours.index(j)))
            fresher = tables[source].tau(subject)
            if fresher > table.tau(subject):
                new.estimates[subject] = tables[source].estimate(subject)
                new.taus[subject] = fresher
        for subject in neighbours:
            new.estimates[subject] = own_normalized[subject]
            new.taus[subject] = t
        updated[owner] = new
    return updated


def estimate_age_total(tables: Mapping[str, EstimateTable], t: int) -> int:
    """Sum of t - tau over every entry of every table."""
    return sum(table.age(subject, t) for table in tables.values() for subject in table.subjects)


def average_age(history: Sequence[Mapping[str, EstimateTable]]) -> float:
    """Mean estimate age over steps 0..T, normalized by N and T.

    `history[t]` holds all tables at step t.
    """
    horizon = len(history) - 1
    if horizon < 1:
        raise EstimateError("average_age needs tables for at least steps 0 and 1")
    n_agents = len(history[0])
    total = sum(estimate_age_total(tables, t) for t, tables in enumerate(history))
    return total / (n_agents * horizon)


def average_range(trackers: Iterable[SmoothedTracker]) -> float:
    """Mean width of the smoothed-reward extrema across agents."""
    trackers = list(trackers)
    if not trackers:
        return 0.0
    return sum(tracker.range for tracker in trackers) / len(trackers)


def dump_rows(tables: Mapping[str, EstimateTable], t: int) -> List[EstimateRow]:
    """Rows of one step's estimate dump, owners then subjects in table order."""
    return [
        (t, owner, subject, table.estimates[subject], table.taus[subject])
        for owner, table in tables.items()
        for subject in table.subjects
    ]


def write_estimate_dump(rows: Iterable[EstimateRow], path: Union[str, Path]) -> Path:
    """Write `t,owner,subject,estimate,tau` rows."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(ESTIMATE_CSV_COLUMNS)
        for t, owner, subject, estimate, tau in rows:
            writer.writerow([t, owner, subject, repr(float(estimate)), tau])
    return path
