import numpy as np
import pytest
import torch

from marl_harness import EnvClient, make_episode


@pytest.fixture(scope="session")
def conf_client():
    """One live game server for the whole session, confidentiality scenario."""
    client = EnvClient.spawn(goal="confidentiality")
    client.hello()
    yield client
    client.close()


@pytest.fixture
def rng():
    return np.random.Generator(np.random.Philox(0))


def synthetic_episode(rng, steps=4, n_agents=2, obs_dim=6, n_actions=5,
                      state_dim=12, terminal=True):
    """Random but well-formed episode arrays for learner-level tests."""
    obs = rng.standard_normal((steps + 1, n_agents, obs_dim)).astype(np.float32)
    avail = (rng.random((steps + 1, n_agents, n_actions)) < 0.6).astype(np.float32)
    avail[..., 0] = 1.0
    states = rng.standard_normal((steps + 1, state_dim)).astype(np.float32)
    actions = np.zeros((steps, n_agents), dtype=np.int64)
    for t in range(steps):
        for agent in range(n_agents):
            actions[t, agent] = rng.choice(np.flatnonzero(avail[t, agent]))
    rewards = rng.standard_normal(steps).astype(np.float32)
    terminated = np.zeros(steps, dtype=np.float32)
    if terminal:
        terminated[-1] = 1.0
    return make_episode(obs, avail, states, actions, rewards, terminated)


@pytest.fixture
def episode_factory(rng):
    def build(**kwargs):
        return synthetic_episode(rng, **kwargs)

    return build


@pytest.fixture(autouse=True)
def _fixed_torch_seed():
    torch.manual_seed(0)
