"""Action selection, TD(lambda) targets, and the IQL/QMIX training step."""

from __future__ import annotations

import copy

import numpy as np
import torch

from .config import TrainConfig
from .nets import MonotonicMixer, RecurrentQNet


def choose_action(q_values: np.ndarray, avail: np.ndarray, epsilon: float,
                  rng: np.random.Generator) -> int:
    """Epsilon-greedy pick over available action indices only.

    Greedy ties break to the lowest index. With epsilon <= 0 no random
    draw is consumed, so greedy evaluation is independent of rng state.
    """
    avail_idx = np.flatnonzero(avail)
    if avail_idx.size == 0:
        raise ValueError("no available actions to choose from")
    if epsilon > 0 and rng.random() < epsilon:
        return int(rng.choice(avail_idx))
    masked = np.where(np.asarray(avail, dtype=bool), q_values, -np.inf)
    return int(np.argmax(masked))


def select_actions(net: RecurrentQNet, obs, avail, prev_actions, hidden: torch.Tensor,
                   epsilon: float, rng: np.random.Generator):
    """One decision for every agent; returns (action indices, new hidden)."""
    n_agents = net.n_agents
    obs_t = torch.as_tensor(np.asarray(obs, dtype=np.float32))
    agent_ids = torch.eye(n_agents)
    prev = torch.zeros(n_agents, net.n_actions)
    if prev_actions is not None:
        prev[torch.arange(n_agents), torch.as_tensor(prev_actions)] = 1.0
    inputs = torch.cat([obs_t, agent_ids, prev], dim=1)
    with torch.no_grad():
        q_values, new_hidden = net(inputs, hidden)
    actions = [
        choose_action(q_values[i].numpy(), np.asarray(avail[i]), epsilon, rng)
        for i in range(n_agents)
    ]
    return actions, new_hidden


def td_targets(rewards: torch.Tensor, next_values: torch.Tensor, terminated: torch.Tensor,
               mask: torch.Tensor, gamma: float, lam: float | None) -> torch.Tensor:
    """Bootstrapped targets for every transition in a padded batch.

    With lam None the target is the one-step return r + gamma * V(next).
    Otherwise it is the lambda return
        G_t = r_t + gamma * ((1 - lam) * V_{t+1} + lam * G_{t+1}),
    closed at terminal transitions (target is the reward alone) and zero
    on padded turns, so padding never leaks into real targets.

    Shapes: rewards/terminated/mask [B, T]; next_values [B, T, K] where
    next_values[:, t] estimates the state reached by transition t.
    Returns [B, T, K].
    """
    rewards = rewards.unsqueeze(-1)
    terminated = terminated.unsqueeze(-1)
    mask_k = mask.unsqueeze(-1)
    alive = 1.0 - terminated
    if lam is None:
        return (rewards + gamma * alive * next_values) * mask_k
    steps = rewards.shape[1]
    targets = torch.zeros_like(next_values)
    future = torch.zeros_like(next_values[:, 0])
    for t in reversed(range(steps)):
        blended = (1.0 - lam) * next_values[:, t] + lam * future
        future = (rewards[:, t] + gamma * alive[:, t] * blended) * mask_k[:, t]
        targets[:, t] = future
    return targets


def masked_mse(pred: torch.Tensor, target: torch.Tensor, mask: torch.Tensor) -> torch.Tensor:
    """Mean squared error over unmasked entries only."""
    while mask.dim() < pred.dim():
        mask = mask.unsqueeze(-1)
    mask = mask.expand_as(pred)
    return ((pred - target) ** 2 * mask).sum() / mask.sum().clamp(min=1.0)


class Learner:
    """Owns the online and target networks and applies gradient updates."""

    def __init__(self, config: TrainConfig, obs_dim: int, n_actions: int,
                 n_agents: int, state_dim: int):
        config.validate()
        self.config = config
        self.n_agents = n_agents
        self.net = RecurrentQNet(obs_dim, n_actions, n_agents, config.hidden_dim)
        self.target_net = copy.deepcopy(self.net)
        self.mixer = None
        self.target_mixer = None
        params = list(self.net.parameters())
        if config.algorithm == "qmix":
            self.mixer = MonotonicMixer(n_agents, state_dim, config.mixing_embed_dim)
            self.target_mixer = copy.deepcopy(self.mixer)
            params += list(self.mixer.parameters())
        self.optimizer = torch.optim.RMSprop(params, lr=config.lr, alpha=0.99, eps=1e-5)
        self.train_steps = 0

    def refresh_targets(self) -> None:
        self.target_net.load_state_dict(self.net.state_dict())
        if self.mixer is not None:
            self.target_mixer.load_state_dict(self.mixer.state_dict())

    def unroll(self, net: RecurrentQNet, batch: dict) -> torch.Tensor:
        """Teacher-forced Q values for every stored step: [B, T+1, agents, actions]."""
        obs = batch["obs"]
        actions = batch["actions"]
        batch_size, steps_plus_one, n_agents, _ = obs.shape
        agent_ids = torch.eye(n_agents).expand(batch_size, n_agents, n_agents)
        hidden = net.init_hidden(batch_size * n_agents)
        outputs = []
        for t in range(steps_plus_one):
            if t == 0:
                prev = torch.zeros(batch_size, n_agents, net.n_actions)
            else:
                prev = torch.nn.functional.one_hot(
                    actions[:, t - 1], net.n_actions
                ).float()
            inputs = torch.cat([obs[:, t], agent_ids, prev], dim=-1)
            q_values, hidden = net(inputs.reshape(batch_size * n_agents, -1), hidden)
            outputs.append(q_values.view(batch_size, n_agents, -1))
        return torch.stack(outputs, dim=1)

    def compute_loss(self, batch: dict) -> tuple[torch.Tensor, dict]:
        tensors = {
            key: torch.as_tensor(value) for key, value in batch.items()
        }
        actions = tensors["actions"]
        steps = actions.shape[1]
        q_all = self.unroll(self.net, tensors)
        chosen = q_all[:, :steps].gather(-1, actions.unsqueeze(-1)).squeeze(-1)
        with torch.no_grad():
            target_all = self.unroll(self.target_net, tensors)
            target_all = target_all.masked_fill(tensors["avail"] < 0.5, -torch.inf)
            best_next = target_all.max(dim=-1).values[:, 1:]
        if self.config.algorithm == "qmix":
            pred = self.mixer(chosen, tensors["states"][:, :steps])
            with torch.no_grad():
                next_values = self.target_mixer(
                    best_next, tensors["states"][:, 1 : steps + 1]
                ).unsqueeze(-1)
                targets = td_targets(
                    tensors["rewards"], next_values, tensors["terminated"],
                    tensors["mask"], self.config.gamma, self.config.td_lambda,
                ).squeeze(-1)
        else:
            pred = chosen
            with torch.no_grad():
                targets = td_targets(
                    tensors["rewards"], best_next, tensors["terminated"],
                    tensors["mask"], self.config.gamma, self.config.td_lambda,
                )
        loss = masked_mse(pred, targets, tensors["mask"])
        metrics = {
            "loss": float(loss.detach()),
            "target_mean": float(targets.mean()),
        }
        return loss, metrics

    def train_step(self, batch: dict) -> dict:
        """One gradient update; refreshes targets on the configured interval."""
        loss, metrics = self.compute_loss(batch)
        self.optimizer.zero_grad()
        loss.backward()
        clip = self.config.grad_clip_norm
        grad_norm = torch.nn.utils.clip_grad_norm_(
            [p for group in self.optimizer.param_groups for p in group["params"]],
            float("inf") if clip is None else clip,
        )
        self.optimizer.step()
        self.train_steps += 1
        if self.train_steps % self.config.target_update_interval == 0:
            self.refresh_targets()
        metrics["grad_norm"] = float(grad_norm)
        metrics["train_steps"] = self.train_steps
        return metrics

    def train_from(self, buffer, rng: np.random.Generator) -> dict | None:
        """Sample and update once; None signals an underfilled buffer."""
        if not buffer.can_sample(self.config.batch_size):
            return None
        return self.train_step(buffer.sample(self.config.batch_size, rng))

    def state_dict(self) -> dict:
        out = {
            "net": self.net.state_dict(),
            "target_net": self.target_net.state_dict(),
            "optimizer": self.optimizer.state_dict(),
            "train_steps": self.train_steps,
        }
        if self.mixer is not None:
            out["mixer"] = self.mixer.state_dict()
            out["target_mixer"] = self.target_mixer.state_dict()
        return out

    def load_state_dict(self, data: dict) -> None:
        self.net.load_state_dict(data["net"])
        self.target_net.load_state_dict(data["target_net"])
        self.optimizer.load_state_dict(data["optimizer"])
        self.train_steps = data["train_steps"]
        if self.mixer is not None:
            self.mixer.load_state_dict(data["mixer"])
            self.target_mixer.load_state_dict(data["target_mixer"])
