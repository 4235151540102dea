"""Episodic replay storage with padding-aware batch sampling."""

from __future__ import annotations

import numpy as np

EPISODE_KEYS = ("obs", "avail", "states", "actions", "rewards", "terminated")


def make_episode(obs, avail, states, actions, rewards, terminated) -> dict:
    """Bundle one episode's arrays, checking that lengths line up.

    Sequence arrays (obs, avail, states) carry T+1 entries so targets can
    bootstrap from the post-transition step; the rest carry T.
    """
    episode = {
        "obs": np.asarray(obs, dtype=np.float32),
        "avail": np.asarray(avail, dtype=np.float32),
        "states": np.asarray(states, dtype=np.float32),
        "actions": np.asarray(actions, dtype=np.int64),
        "rewards": np.asarray(rewards, dtype=np.float32),
        "terminated": np.asarray(terminated, dtype=np.float32),
    }
    steps = episode["rewards"].shape[0]
    if steps < 1:
        raise ValueError("episode must contain at least one step")
    for key in ("obs", "avail", "states"):
        if episode[key].shape[0] != steps + 1:
            raise ValueError(f"{key} must have {steps + 1} entries, got {episode[key].shape[0]}")
    for key in ("actions", "terminated"):
        if episode[key].shape[0] != steps:
            raise ValueError(f"{key} must have {steps} entries, got {episode[key].shape[0]}")
    return episode


class ReplayBuffer:
    """Ring buffer of whole episodes; oldest episodes are overwritten first."""

    def __init__(self, capacity: int):
        if capacity < 1:
            raise ValueError("capacity must be positive")
        self.capacity = capacity
        self._episodes: list[dict] = []
        self._cursor = 0

    def __len__(self) -> int:
        return len(self._episodes)

    def add(self, episode: dict) -> None:
        if len(self._episodes) < self.capacity:
            self._episodes.append(episode)
        else:
            self._episodes[self._cursor] = episode
            self._cursor = (self._cursor + 1) % self.capacity

    def can_sample(self, batch_size: int) -> bool:
        return len(self._episodes) >= batch_size

    def sample(self, batch_size: int, rng: np.random.Generator) -> dict:
        """Draw distinct episodes and stack them, zero-padded to a common length.

        The returned mask is 1 on real turns. Padded availability rows mark
        action 0 available so masked maximisation stays finite.
        """
        if not self.can_sample(batch_size):
            raise ValueError("not enough stored episodes to sample a batch")
        picks = rng.choice(len(self._episodes), size=batch_size, replace=False)
        episodes = [self._episodes[i] for i in picks]
        return stack_episodes(episodes)


def stack_episodes(episodes: list[dict]) -> dict:
    longest = max(ep["rewards"].shape[0] for ep in episodes)
    batch = len(episodes)
    _, n_agents, obs_dim = episodes[0]["obs"].shape
    n_actions = episodes[0]["avail"].shape[-1]
    state_dim = episodes[0]["states"].shape[-1]

    out = {
        "obs": np.zeros((batch, longest + 1, n_agents, obs_dim), dtype=np.float32),
        "avail": np.zeros((batch, longest + 1, n_agents, n_actions), dtype=np.float32),
        "states": np.zeros((batch, longest + 1, state_dim), dtype=np.float32),
        "actions": np.zeros((batch, longest, n_agents), dtype=np.int64),
        "rewards": np.zeros((batch, longest), dtype=np.float32),
        "terminated": np.zeros((batch, longest), dtype=np.float32),
        "mask": np.zeros((batch, longest), dtype=np.float32),
    }
    out["avail"][..., 0] = 1.0
    for row, ep in enumerate(episodes):
        steps = ep["rewards"].shape[0]
        out["obs"][row, : steps + 1] = ep["obs"]
        out["avail"][row, : steps + 1] = ep["avail"]
        out["states"][row, : steps + 1] = ep["states"]
        out["actions"][row, :steps] = ep["actions"]
        out["rewards"][row, :steps] = ep["rewards"]
        out["terminated"][row, :steps] = ep["terminated"]
        out["mask"][row, :steps] = 1.0
    return out
