"""Models package for ssdlab."""

from .agents import AgentSpec, AgentType
from .environment import (
    Action,
    EnvConfig,
    Environment,
    Event,
    EventKind,
    EventLog,
    Observation,
    Variant,
)
from .experiment import ExperimentConfig, RunManifest
from .game import DilemmaClass, DilemmaReport, PayoffMatrix, SchellingDiagram, Strategy
from .learning import LearnerConfig
from .metrics import EpisodeMetrics
from .shaping import ShapingConfig, ShapingMethod

__all__ = [
    "AgentSpec",
    "AgentType",
    "Action",
    "EnvConfig",
    "Environment",
    "Event",
    "EventKind",
    "EventLog",
    "Observation",
    "Variant",
    "ExperimentConfig",
    "RunManifest",
    "DilemmaClass",
    "DilemmaReport",
    "PayoffMatrix",
    "SchellingDiagram",
    "Strategy",
    "LearnerConfig",
    "EpisodeMetrics",
    "ShapingConfig",
    "ShapingMethod",
]
