"""Matrix-game and Schelling-diagram models."""

from enum import Enum
from typing import Dict, List, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, model_validator

OUTCOME_KEYS = ("R", "T", "S", "P")


class Outcomes(BaseModel):
    """One agent's four outcome values of a 2x2 social dilemma."""

    model_config = ConfigDict(frozen=True)

    R: float  # mutual cooperation
    T: float  # temptation
    S: float  # sucker
    P: float  # mutual defection

    def as_tuple(self) -> Tuple[float, float, float, float]:
        return (self.R, self.T, self.S, self.P)


class PayoffMatrix(BaseModel):
    """Per-agent outcome values of a two-agent matrix-form social dilemma."""

    model_config = ConfigDict(frozen=True)

    agents: List[str]
    outcomes: Dict[str, Outcomes]

    @model_validator(mode="before")
    @classmethod
    def _check_cells(cls, data: object) -> object:
        if not isinstance(data, dict):
            return data
        agents = data.get("agents") or []
        outcomes = data.get("outcomes") or {}
        if len(agents) != 2:
            raise ValueError(f"a 2x2 game needs exactly two agents, got {len(agents)}")
        if len(set(agents)) != len(agents):
            raise ValueError(f"duplicate agent ids: {agents}")
        for agent in agents:
            cells = outcomes.get(agent)
            if cells is None:
                raise ValueError(f"missing outcome cells for agent.{agent}")
            if isinstance(cells, dict):
                for key in OUTCOME_KEYS:
                    if key not in cells:
                        raise ValueError(f"missing outcome cell agent.{agent}.{key}")
        extra = set(outcomes) - set(agents)
        if extra:
            raise ValueError(f"outcomes given for undeclared agents: {sorted(extra)}")
        return data

    def for_agent(self, agent: str) -> Outcomes:
        """Get one agent's outcomes."""
        return self.outcomes[agent]


class DilemmaClass(str, Enum):
    """Overall classification of a matrix game."""

    PRISONERS_DILEMMA = "PrisonersDilemma"
    CHICKEN = "Chicken"
    STAG_HUNT = "StagHunt"
    NOT_A_SOCIAL_DILEMMA = "NotASocialDilemma"


class ConditionChecks(BaseModel):
    """Per-agent evaluation of conditions C1-C4."""

    c1: bool
    c2: bool
    c3: bool
    greed: bool
    fear: bool

    @property
    def base_conditions(self) -> bool:
        return self.c1 and self.c2 and self.c3


class DilemmaReport(BaseModel):
    """Result of checking a game against the social dilemma conditions."""

    checks: Dict[str, ConditionChecks]
    classification: DilemmaClass
    asymmetric: bool

    @property
    def is_social_dilemma(self) -> bool:
        return self.classification != DilemmaClass.NOT_A_SOCIAL_DILEMMA


class Strategy(str, Enum):
    """Role of an agent in a Schelling sweep."""

    COOPERATE = "cooperate"
    DEFECT = "defect"


class SchellingSample(BaseModel):
    """One episode return observed under a fixed role assignment."""

    agent_type: str
    strategy: Strategy
    k: int = Field(ge=0)  # number of *other* cooperators
    episode_return: float


class SchellingCell(BaseModel):
    """Mean return of one (agent type, k, strategy) cell."""

    agent_type: str
    k: int
    strategy: Strategy
    mean_return: float
    n_samples: int = Field(ge=1)


class SchellingDiagram(BaseModel):
    """Empirical Schelling diagram aggregated by agent type."""

    n_agents: int = Field(ge=2)
    agent_types: List[str]
    cells: List[SchellingCell]

    def cell(self, agent_type: str, k: int, strategy: Strategy) -> Optional[SchellingCell]:
        """Look up a cell, None when no sample fell into it."""
        for cell in self.cells:
            if cell.agent_type == agent_type and cell.k == k and cell.strategy == strategy:
                return cell
        return None

    def absent_cells(self) -> List[Tuple[str, int, Strategy]]:
        """Cells over k = 0..N-1 that carry no sample."""
        present = {(c.agent_type, c.k, c.strategy) for c in self.cells}
        return [
            (agent_type, k, strategy)
            for agent_type in self.agent_types
            for k in range(self.n_agents)
            for strategy in Strategy
            if (agent_type, k, strategy) not in present
        ]


class Verdict(str, Enum):
    """Outcome of an empirical dilemma check."""

    PASS = "pass"
    FAIL = "fail"
    INCONCLUSIVE = "inconclusive"


class KComparison(BaseModel):
    """Defect vs. cooperate comparison at one cooperator count."""

    k: int
    cooperate_mean: Optional[float] = None
    defect_mean: Optional[float] = None

    @property
    def defect_dominates(self) -> Optional[bool]:
        if self.cooperate_mean is None or self.defect_mean is None:
            return None
        return self.defect_mean > self.cooperate_mean


class TypeVerdict(BaseModel):
    """Empirical dilemma verdict for one agent type."""

    agent_type: str
    verdict: Verdict
    comparisons: List[KComparison]


class EmpiricalReport(BaseModel):
    """Empirical dilemma verdict for all agent types of a diagram."""

    types: Dict[str, TypeVerdict]
    verdict: Verdict
    failures: List[Tuple[str, int]] = []
