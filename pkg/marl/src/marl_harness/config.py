"""Training configuration and the fixed hyperparameter grid."""

from __future__ import annotations

from dataclasses import dataclass, fields

ALGORITHMS = ("iql", "qmix")
GOALS = ("confidentiality", "integrity", "availability")

GRID_BATCH_SIZES = (128, 256)
GRID_BUFFER_SIZES = (5000, 10000)
GRID_LEARNING_RATES = (0.005, 0.01)
GRID_TD_LAMBDAS = (None, 0.6)


class TrainConfigError(ValueError):
    pass


@dataclass
class TrainConfig:
    """Hyperparameters for one training run.

    `seed` drives network init, exploration draws, and per-episode reset
    seeds; the environment itself is seeded per episode over the wire.
    """

    algorithm: str = "iql"
    goal: str = "confidentiality"
    misinform: bool = False
    episode_length: int = 50
    total_timesteps: int = 500_000
    batch_size: int = 128
    buffer_size: int = 5000
    lr: float = 0.005
    td_lambda: float | None = None
    gamma: float = 0.99
    epsilon_start: float = 1.0
    epsilon_end: float = 0.05
    epsilon_anneal_steps: int = 50_000
    target_update_interval: int = 200
    hidden_dim: int = 64
    mixing_embed_dim: int = 32
    grad_clip_norm: float | None = 10.0
    use_info_state: bool = False
    checkpoint_interval: int = 50_000
    curve_window: int = 10
    seed: int = 0

    def validate(self) -> None:
        if self.algorithm not in ALGORITHMS:
            raise TrainConfigError(f"unknown algorithm {self.algorithm!r}")
        if self.goal not in GOALS:
            raise TrainConfigError(f"unknown goal {self.goal!r}")
        for name in ("episode_length", "total_timesteps", "batch_size", "buffer_size",
                     "epsilon_anneal_steps", "target_update_interval", "hidden_dim",
                     "mixing_embed_dim", "checkpoint_interval", "curve_window"):
            if getattr(self, name) < 1:
                raise TrainConfigError(f"{name} must be positive")
        if self.batch_size > self.buffer_size:
            raise TrainConfigError("batch_size cannot exceed buffer_size")
        if not 0.0 < self.lr:
            raise TrainConfigError("lr must be positive")
        if not 0.0 <= self.gamma <= 1.0:
            raise TrainConfigError("gamma must lie in [0, 1]")
        if self.td_lambda is not None and not 0.0 <= self.td_lambda <= 1.0:
            raise TrainConfigError("td_lambda must lie in [0, 1] or be None")
        if self.grad_clip_norm is not None and self.grad_clip_norm <= 0:
            raise TrainConfigError("grad_clip_norm must be positive or None")
        if not 0.0 <= self.epsilon_end <= self.epsilon_start <= 1.0:
            raise TrainConfigError("epsilon schedule must satisfy 0 <= end <= start <= 1")

    def epsilon_at(self, timesteps: int) -> float:
        frac = min(1.0, timesteps / self.epsilon_anneal_steps)
        return self.epsilon_start + frac * (self.epsilon_end - self.epsilon_start)

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    @classmethod
    def from_dict(cls, data: dict) -> "TrainConfig":
        names = {f.name for f in fields(cls)}
        unknown = set(data) - names
        if unknown:
            raise TrainConfigError(f"unknown config keys: {sorted(unknown)}")
        config = cls(**data)
        config.validate()
        return config


def grid_cells(base: TrainConfig) -> list[TrainConfig]:
    """The fixed 16-cell sweep: batch size x buffer size x lr x td-lambda."""
    cells = []
    for batch in GRID_BATCH_SIZES:
        for buffer in GRID_BUFFER_SIZES:
            for lr in GRID_LEARNING_RATES:
                for lam in GRID_TD_LAMBDAS:
                    data = base.to_dict()
                    data.update(batch_size=batch, buffer_size=buffer, lr=lr, td_lambda=lam)
                    cells.append(TrainConfig.from_dict(data))
    return cells
