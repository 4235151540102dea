"""Recurrent Q-learning harness for the subnet defence wire protocol."""

from .buffer import ReplayBuffer, make_episode, stack_episodes
from .client import ConnectionLost, EnvClient, ProtocolClientError, pristine_state
from .config import TrainConfig, TrainConfigError, grid_cells
from .grid import grid_search
from .learner import Learner, choose_action, masked_mse, select_actions, td_targets
from .nets import MonotonicMixer, RecurrentQNet, mixer_gradient_error, monotonicity_gap
from .runner import (
    EvalResult,
    TrainingInterrupted,
    TrainResult,
    build_learner,
    check_spaces,
    collect_episode,
    evaluate_policy,
    load_checkpoint,
    run_training,
    save_checkpoint,
)

__version__ = "0.1.0"

__all__ = [
    "ConnectionLost",
    "EnvClient",
    "EvalResult",
    "Learner",
    "MonotonicMixer",
    "ProtocolClientError",
    "RecurrentQNet",
    "ReplayBuffer",
    "TrainConfig",
    "TrainConfigError",
    "TrainResult",
    "TrainingInterrupted",
    "build_learner",
    "check_spaces",
    "choose_action",
    "collect_episode",
    "evaluate_policy",
    "grid_cells",
    "grid_search",
    "load_checkpoint",
    "make_episode",
    "masked_mse",
    "mixer_gradient_error",
    "monotonicity_gap",
    "pristine_state",
    "run_training",
    "save_checkpoint",
    "select_actions",
    "stack_episodes",
    "td_targets",
]
