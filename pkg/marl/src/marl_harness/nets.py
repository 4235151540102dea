"""Value networks: per-agent recurrent Q and the monotonic mixer."""

from __future__ import annotations

import torch
from torch import nn


class RecurrentQNet(nn.Module):
    """Shared-parameter action-value network with a GRU memory.

    Per agent and turn the input is the observation, a one-hot agent id,
    and a one-hot of the previous action (zeros on the first turn).
    """

    def __init__(self, obs_dim: int, n_actions: int, n_agents: int, hidden_dim: int = 64):
        super().__init__()
        self.obs_dim = obs_dim
        self.n_actions = n_actions
        self.n_agents = n_agents
        self.hidden_dim = hidden_dim
        self.input_dim = obs_dim + n_agents + n_actions
        self.fc_in = nn.Linear(self.input_dim, hidden_dim)
        self.rnn = nn.GRUCell(hidden_dim, hidden_dim)
        self.fc_out = nn.Linear(hidden_dim, n_actions)

    def init_hidden(self, batch: int) -> torch.Tensor:
        return self.fc_in.weight.new_zeros(batch, self.hidden_dim)

    def forward(self, inputs: torch.Tensor, hidden: torch.Tensor):
        x = torch.relu(self.fc_in(inputs))
        new_hidden = self.rnn(x, hidden)
        return self.fc_out(new_hidden), new_hidden


class MonotonicMixer(nn.Module):
    """State-conditioned mixing of per-agent values, monotone in each input.

    Hypernetworks map the global state to mixing weights; absolute values
    keep every weight non-negative, so dQtot/dQagent >= 0 everywhere.
    """

    def __init__(self, n_agents: int, state_dim: int, embed_dim: int = 32):
        super().__init__()
        self.n_agents = n_agents
        self.state_dim = state_dim
        self.embed_dim = embed_dim
        self.hyper_w1 = nn.Linear(state_dim, n_agents * embed_dim)
        self.hyper_b1 = nn.Linear(state_dim, embed_dim)
        self.hyper_w2 = nn.Linear(state_dim, embed_dim)
        self.hyper_b2 = nn.Sequential(
            nn.Linear(state_dim, embed_dim), nn.ReLU(), nn.Linear(embed_dim, 1)
        )

    def forward(self, agent_qs: torch.Tensor, states: torch.Tensor) -> torch.Tensor:
        """Mix agent_qs [..., n_agents] under states [..., state_dim]."""
        lead_shape = agent_qs.shape[:-1]
        qs = agent_qs.reshape(-1, 1, self.n_agents)
        flat_states = states.reshape(-1, self.state_dim)
        w1 = torch.abs(self.hyper_w1(flat_states)).view(-1, self.n_agents, self.embed_dim)
        b1 = self.hyper_b1(flat_states).view(-1, 1, self.embed_dim)
        hidden = nn.functional.elu(torch.bmm(qs, w1) + b1)
        w2 = torch.abs(self.hyper_w2(flat_states)).view(-1, self.embed_dim, 1)
        b2 = self.hyper_b2(flat_states).view(-1, 1, 1)
        mixed = torch.bmm(hidden, w2) + b2
        return mixed.view(lead_shape)


def monotonicity_gap(mixer: MonotonicMixer, n_points: int, rng, delta: float = 1e-3) -> float:
    """Smallest finite-difference slope of Qtot along any single agent's value.

    Probes random states and value vectors; a monotone mixer keeps this
    above a small negative rounding allowance.
    """
    states = torch.as_tensor(
        rng.standard_normal((n_points, mixer.state_dim)), dtype=torch.float32
    )
    qs = torch.as_tensor(
        rng.standard_normal((n_points, mixer.n_agents)) * 3.0, dtype=torch.float32
    )
    with torch.no_grad():
        base = mixer(qs, states)
        worst = float("inf")
        for agent in range(mixer.n_agents):
            bumped = qs.clone()
            bumped[:, agent] += delta
            diff = (mixer(bumped, states) - base) / delta
            worst = min(worst, float(diff.min()))
    return worst


def mixer_gradient_error(mixer: MonotonicMixer, n_points: int, rng,
                         delta: float = 1e-5) -> float:
    """Worst relative error between autograd dQtot/dQagent and central differences.

    Runs in float64 so the finite-difference truncation error stays well
    below the tolerance being checked.
    """
    double_mixer = MonotonicMixer(mixer.n_agents, mixer.state_dim, mixer.embed_dim).double()
    double_mixer.load_state_dict(mixer.state_dict())
    states = torch.as_tensor(rng.standard_normal((n_points, mixer.state_dim)))
    qs = torch.as_tensor(rng.standard_normal((n_points, mixer.n_agents)) * 3.0)
    qs.requires_grad_(True)
    double_mixer(qs, states).sum().backward()
    analytic = qs.grad.detach()
    worst = 0.0
    with torch.no_grad():
        for agent in range(mixer.n_agents):
            up = qs.detach().clone()
            down = qs.detach().clone()
            up[:, agent] += delta
            down[:, agent] -= delta
            numeric = (double_mixer(up, states) - double_mixer(down, states)) / (2 * delta)
            gap = (numeric - analytic[:, agent]).abs()
            scale = torch.clamp(analytic[:, agent].abs(), min=1e-3)
            worst = max(worst, float((gap / scale).max()))
    return worst
