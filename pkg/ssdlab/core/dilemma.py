"""Matrix-form social dilemma analysis and empirical Schelling diagrams."""

import csv
import logging
import re
from collections import defaultdict
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Tuple, Union

from pydantic import ValidationError

from ssdlab.core.errors import GameValidationError
from ssdlab.models.game import (
    OUTCOME_KEYS,
    ConditionChecks,
    DilemmaClass,
    DilemmaReport,
    EmpiricalReport,
    KComparison,
    Outcomes,
    PayoffMatrix,
    SchellingCell,
    SchellingDiagram,
    SchellingSample,
    Strategy,
    TypeVerdict,
    Verdict,
)

logger = logging.getLogger(__name__)

_GAME_LINE = re.compile(
    r"^agent\.(?P<agent>[^=\s]+)\.(?P<cell>[RTSP])\s*=\s*(?P<value>\S+)$"
)

SCHELLING_CSV_COLUMNS = ["agent_type", "k", "strategy", "mean_return", "n_samples"]


def check_outcomes(outcomes: Outcomes) -> ConditionChecks:
    """Evaluate C1-C4 for one agent; strict inequalities throughout."""
    R, T, S, P = outcomes.as_tuple()
    return ConditionChecks(
        c1=R > P,
        c2=R > S,
        c3=2 * R > T + S,
        greed=T > R,
        fear=P > S,
    )


def classify(checks: Iterable[ConditionChecks]) -> DilemmaClass:
    """Classify a game from its per-agent condition checks."""
    checks = list(checks)
    if not checks or not all(c.base_conditions for c in checks):
        return DilemmaClass.NOT_A_SOCIAL_DILEMMA
    greed = all(c.greed for c in checks)
    fear = all(c.fear for c in checks)
    if greed and fear:
        return DilemmaClass.PRISONERS_DILEMMA
    if greed:
        return DilemmaClass.CHICKEN
    if fear:
        return DilemmaClass.STAG_HUNT
    return DilemmaClass.NOT_A_SOCIAL_DILEMMA


def check_social_dilemma(game: PayoffMatrix) -> DilemmaReport:
    """Check a game against conditions C1-C4 and classify it."""
    checks = {agent: check_outcomes(game.for_agent(agent)) for agent in game.agents}
    return DilemmaReport(
        checks=checks,
        classification=classify(checks.values()),
        asymmetric=is_asymmetric(game),
    )


def is_asymmetric(game: PayoffMatrix) -> bool:
    """True iff any outcome value differs between any two agents."""
    values = [game.for_agent(agent).as_tuple() for agent in game.agents]
    return any(a != b for i, a in enumerate(values) for b in values[i + 1 :])


def normalize_game(game: PayoffMatrix) -> PayoffMatrix:
    """Map each agent's outcomes onto [0, 1] relative to its own range."""
    normalized: Dict[str, Outcomes] = {}
    for agent in game.agents:
        values = game.for_agent(agent).as_tuple()
        low, high = min(values), max(values)
        if high <= low:
            raise GameValidationError(
                f"agent.{agent} is degenerate: all outcomes equal {low}"
            )
        span = high - low
        normalized[agent] = Outcomes(
            **{key: (value - low) / span for key, value in zip(OUTCOME_KEYS, values)}
        )
    return PayoffMatrix(agents=list(game.agents), outcomes=normalized)


def build_schelling_diagram(
    samples: Iterable[SchellingSample], n_agents: Optional[int] = None
) -> SchellingDiagram:
    """Average episode returns per (agent type, k, strategy) cell."""
    samples = list(samples)
    if not samples:
        raise GameValidationError("a Schelling diagram needs at least one sample")

    types: List[str] = []
    sums: Dict[Tuple[str, int, Strategy], float] = defaultdict(float)
    counts: Dict[Tuple[str, int, Strategy], int] = defaultdict(int)
    for sample in samples:
        if sample.agent_type not in types:
            types.append(sample.agent_type)
        key = (sample.agent_type, sample.k, sample.strategy)
        sums[key] += sample.episode_return
        counts[key] += 1

    max_k = max(sample.k for sample in samples)
    if n_agents is None:
        n_agents = max(max_k + 1, 2)
    if max_k > n_agents - 1:
        raise GameValidationError(
            f"cooperator count {max_k} exceeds N-1 for N={n_agents}"
        )

    strategy_order = list(Strategy)
    ordered = sorted(
        counts,
        key=lambda key: (types.index(key[0]), key[1], strategy_order.index(key[2])),
    )
    cells = [
        SchellingCell(
            agent_type=agent_type,
            k=k,
            strategy=strategy,
            mean_return=sums[(agent_type, k, strategy)] / counts[(agent_type, k, strategy)],
            n_samples=counts[(agent_type, k, strategy)],
        )
        for agent_type, k, strategy in ordered
    ]
    return SchellingDiagram(n_agents=n_agents, agent_types=types, cells=cells)


def verify_empirical_dilemma(diagram: SchellingDiagram) -> EmpiricalReport:
    """Check that defection beats cooperation at every sampled cooperator count."""
    types: Dict[str, TypeVerdict] = {}
    failures: List[Tuple[str, int]] = []
    for agent_type in diagram.agent_types:
        comparisons: List[KComparison] = []
        verdict = Verdict.PASS
        for k in range(diagram.n_agents):
            cooperate = diagram.cell(agent_type, k, Strategy.COOPERATE)
            defect = diagram.cell(agent_type, k, Strategy.DEFECT)
            if cooperate is None and defect is None:
                continue
            comparison = KComparison(
                k=k,
                cooperate_mean=cooperate.mean_return if cooperate else None,
                defect_mean=defect.mean_return if defect else None,
            )
            comparisons.append(comparison)
            dominates = comparison.defect_dominates
            if dominates is None:
                if verdict == Verdict.PASS:
                    verdict = Verdict.INCONCLUSIVE
            elif not dominates:
                verdict = Verdict.FAIL
                failures.append((agent_type, k))
        if not comparisons:
            verdict = Verdict.INCONCLUSIVE
        types[agent_type] = TypeVerdict(
            agent_type=agent_type, verdict=verdict, comparisons=comparisons
        )

    if failures:
        overall = Verdict.FAIL
    elif any(v.verdict == Verdict.INCONCLUSIVE for v in types.values()):
        overall = Verdict.INCONCLUSIVE
        logger.warning("Schelling diagram has unpaired cells; verdict inconclusive")
    else:
        overall = Verdict.PASS
    return EmpiricalReport(types=types, verdict=overall, failures=failures)


def game_to_schelling_samples(game: PayoffMatrix) -> List[SchellingSample]:
    """Express a 2x2 game as Schelling samples, one per agent and outcome."""
    samples: List[SchellingSample] = []
    for agent in game.agents:
        o = game.for_agent(agent)
        for strategy, k, value in (
            (Strategy.COOPERATE, 0, o.S),
            (Strategy.COOPERATE, 1, o.R),
            (Strategy.DEFECT, 0, o.P),
            (Strategy.DEFECT, 1, o.T),
        ):
            samples.append(
                SchellingSample(agent_type=agent, strategy=strategy, k=k, episode_return=value)
            )
    return samples


def empirical_outcomes(diagram: SchellingDiagram) -> Dict[str, Optional[Outcomes]]:
    """Read R, T, S, P per agent type off the diagram's extreme cooperator counts.

    R and T are the cooperate/defect returns when all others cooperate
    (k = N-1), S and P when none do (k = 0). Types missing any of those
    cells map to None.
    """
    result: Dict[str, Optional[Outcomes]] = {}
    top = diagram.n_agents - 1
    for agent_type in diagram.agent_types:
        cells = {
            "R": diagram.cell(agent_type, top, Strategy.COOPERATE),
            "T": diagram.cell(agent_type, top, Strategy.DEFECT),
            "S": diagram.cell(agent_type, 0, Strategy.COOPERATE),
            "P": diagram.cell(agent_type, 0, Strategy.DEFECT),
        }
        if any(cell is None for cell in cells.values()):
            result[agent_type] = None
            continue
        result[agent_type] = Outcomes(
            **{key: cell.mean_return for key, cell in cells.items() if cell is not None}
        )
    return result


def check_empirical_outcomes(diagram: SchellingDiagram) -> Dict[str, ConditionChecks]:
    """Evaluate C1-C4 on the empirical outcomes of each fully sampled type."""
    return {
        agent_type: check_outcomes(outcomes)
        for agent_type, outcomes in empirical_outcomes(diagram).items()
        if outcomes is not None
    }


def parse_game_text(text: str, source: str = "<game>") -> PayoffMatrix:
    """Parse `agent.<id>.<R|T|S|P> = <number>` lines into a game."""
    agents: List[str] = []
    cells: Dict[str, Dict[str, float]] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        match = _GAME_LINE.match(line)
        if match is None:
            raise GameValidationError(f"{source}:{lineno}: cannot parse line {raw!r}")
        agent, cell, value = match.group("agent"), match.group("cell"), match.group("value")
        try:
            number = float(value)
        except ValueError:
            raise GameValidationError(
                f"{source}:{lineno}: agent.{agent}.{cell} is not a number: {value!r}"
            ) from None
        if agent not in cells:
            agents.append(agent)
            cells[agent] = {}
        if cell in cells[agent]:
            raise GameValidationError(
                f"{source}:{lineno}: duplicate cell agent.{agent}.{cell}"
            )
        cells[agent][cell] = number

    for agent in agents:
        for key in OUTCOME_KEYS:
            if key not in cells[agent]:
                raise GameValidationError(f"{source}: missing cell agent.{agent}.{key}")
    try:
        return PayoffMatrix(agents=agents, outcomes=cells)
    except ValidationError as e:
        raise GameValidationError(f"{source}: {e.errors()[0]['msg']}") from None


def load_game(path: Union[str, Path]) -> PayoffMatrix:
    """Load a matrix-game file."""
    path = Path(path)
    return parse_game_text(path.read_text(), source=str(path))


def dump_game(game: PayoffMatrix) -> str:
    """Serialize a game back into the matrix-game file format."""
    lines = []
    for agent in game.agents:
        outcomes = game.for_agent(agent)
        for key in OUTCOME_KEYS:
            lines.append(f"agent.{agent}.{key} = {getattr(outcomes, key)!r}")
    return "\n".join(lines) + "\n"


def write_schelling_csv(diagram: SchellingDiagram, path: Union[str, Path]) -> Path:
    """Write a diagram as `agent_type,k,strategy,mean_return,n_samples` rows."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(SCHELLING_CSV_COLUMNS)
        for cell in diagram.cells:
            writer.writerow(
                [
                    cell.agent_type,
                    cell.k,
                    cell.strategy.value,
                    repr(cell.mean_return),
                    cell.n_samples,
                ]
            )
    return path
