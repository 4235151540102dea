"""Deterministic two-subnet cyber defence game."""

from .defender import ActionSpace, AgentId, DefenderAction, DefenderVerb
from .engine import EpisodeRecord, StepResult, SubnetDefenseEnv, run_episode
from .errors import (
    ConfigError,
    EngineInvariantError,
    PolicyError,
    ProtocolError,
    UnknownHostError,
)
from .scoring import ObservationFrame, RewardBreakdown
from .world import Goal, ScenarioConfig, Subnet, build_topology

__version__ = "0.1.0"

__all__ = [
    "ActionSpace",
    "AgentId",
    "ConfigError",
    "DefenderAction",
    "DefenderVerb",
    "EngineInvariantError",
    "EpisodeRecord",
    "Goal",
    "ObservationFrame",
    "PolicyError",
    "ProtocolError",
    "RewardBreakdown",
    "ScenarioConfig",
    "StepResult",
    "Subnet",
    "SubnetDefenseEnv",
    "UnknownHostError",
    "build_topology",
    "run_episode",
    "__version__",
]
