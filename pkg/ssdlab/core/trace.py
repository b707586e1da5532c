"""Replay scripted visibility traces through smoothing and estimate propagation."""

import configparser
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Union

from pydantic import ValidationError

from ssdlab.core.errors import TraceFormatError
from ssdlab.core.estimates import (
    EstimateRow,
    EstimateTable,
    average_age,
    dump_rows,
    init_tables,
    propagate,
)
from ssdlab.core.shaping import SmoothedTracker, update_smoothed
from ssdlab.models.trace import Trace, TraceStep

logger = logging.getLogger(__name__)


def _split(value: str) -> List[str]:
    return [item.strip() for item in value.split(",") if item.strip()]


def parse_trace_text(text: str, source: str = "<trace>") -> Trace:
    """Parse a trace file.

    `[trace]` declares `agents`, `gamma` and `lambda`; every `[step.<t>]`
    section lists `rewards` in agent order and optional `visible.<agent>` sets.
    """
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str  # type: ignore[assignment,method-assign]
    try:
        parser.read_string(text, source=source)
    except configparser.Error as e:
        raise TraceFormatError(f"{source}: {e}") from None
    if not parser.has_section("trace"):
        raise TraceFormatError(f"{source}: missing [trace] section")

    header = parser["trace"]
    agents = _split(header.get("agents", ""))
    steps = []
    for section in parser.sections():
        if section == "trace":
            continue
        if not section.startswith("step."):
            raise TraceFormatError(f"{source}: unexpected section [{section}]")
        try:
            t = int(section.split(".", 1)[1])
        except ValueError:
            raise TraceFormatError(f"{source}: bad step number in [{section}]") from None
        body = parser[section]
        rewards = _split(body.get("rewards", ""))
        if len(rewards) != len(agents):
            raise TraceFormatError(
                f"{source}: [{section}] lists {len(rewards)} rewards for {len(agents)} agents"
            )
        visible = {
            key.split(".", 1)[1]: _split(value)
            for key, value in body.items()
            if key.startswith("visible.")
        }
        try:
            steps.append(
                TraceStep(t=t, rewards=dict(zip(agents, map(float, rewards))), visible=visible)
            )
        except (ValueError, ValidationError) as e:
            raise TraceFormatError(f"{source}: [{section}]: {e}") from None

    try:
        return Trace(
            agents=agents,
            gamma=float(header.get("gamma", "0.99")),
            lambda_=float(header.get("lambda", "0.9")),
            steps=sorted(steps, key=lambda s: s.t),
        )
    except ValidationError as e:
        raise TraceFormatError(f"{source}: {e.errors()[0]['msg']}") from None
    except ValueError as e:
        raise TraceFormatError(f"{source}: [trace]: {e}") from None


def load_trace(path: Union[str, Path]) -> Trace:
    path = Path(path)
    return parse_trace_text(path.read_text(), source=str(path))


@dataclass
class TraceResult:
    """Per-step estimate dump and summary of a trace replay."""

    rows: List[EstimateRow]
    tables: Dict[str, EstimateTable]
    trackers: Dict[str, SmoothedTracker]
    average_age: Optional[float]


def run_trace(trace: Trace) -> TraceResult:
    """Run smoothing and propagation only; no environment, no learning."""
    tables = init_tables(trace.agents)
    trackers = {agent: SmoothedTracker() for agent in trace.agents}
    history = [tables]
    rows: List[EstimateRow] = []
    for step in trace.steps:
        trackers = {
            agent: update_smoothed(trackers[agent], step.rewards[agent], trace.gamma, trace.lambda_)
            for agent in trace.agents
        }
        visibility = {agent: step.visible.get(agent, []) for agent in trace.agents}
        tables = propagate(tables, visibility, {a: tr.e_hat for a, tr in trackers.items()}, step.t)
        history.append(tables)
        rows.extend(dump_rows(tables, step.t))
    age = average_age(history) if len(history) > 1 else None
    logger.info("trace of %d steps replayed, average age %s", len(trace.steps), age)
    return TraceResult(rows=rows, tables=tables, trackers=trackers, average_age=age)
