"""Training loop, evaluation protocol, checkpoints, and learning curves."""

from __future__ import annotations

import csv
import logging
import math
import statistics
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import torch

from .buffer import ReplayBuffer, make_episode
from .client import ConnectionLost, EnvClient, pristine_state
from .config import TrainConfig
from .learner import Learner, select_actions
from .nets import monotonicity_gap

log = logging.getLogger("marl_harness")

EVAL_RUNS = 5
EVAL_TIMESTEPS = 1000
PROBE_INTERVAL = 10_000


class TrainingInterrupted(RuntimeError):
    """The connection died mid-run; carries the checkpoint written on the way out."""

    def __init__(self, checkpoint: Path, cause: Exception):
        super().__init__(f"training interrupted; resume from {checkpoint}")
        self.checkpoint = checkpoint
        self.cause = cause


def spawn_client(config: TrainConfig, no_info: bool = False) -> EnvClient:
    return EnvClient.spawn(
        goal=config.goal,
        misinform=config.misinform,
        episode_length=config.episode_length,
        no_info=no_info,
    )


def scenario_name(config: TrainConfig) -> str:
    return config.goal + ("+misinform" if config.misinform else "")


def _flatten(rows) -> list[float]:
    flat: list[float] = []
    for row in rows:
        flat.extend(row)
    return flat


def collect_episode(client: EnvClient, net, spaces: dict, seed: int, epsilon: float,
                    rng: np.random.Generator, use_info_state: bool = False):
    """Play one episode and return (episode arrays, episode return).

    The global state sequence is the concatenated observations unless
    use_info_state asks for the ground-truth summary from step info (the
    turn-zero entry is then the known pristine vector).
    """
    payload = client.reset(seed)
    obs = payload["observations"]
    avail = payload["avail_masks"]
    obs_seq = [obs]
    avail_seq = [avail]
    states = [pristine_state(spaces) if use_info_state else _flatten(obs)]
    actions_seq: list[list[int]] = []
    rewards: list[float] = []
    terminated: list[float] = []
    hidden = net.init_hidden(net.n_agents)
    prev_actions = None
    done = False
    while not done:
        actions, hidden = select_actions(net, obs, avail, prev_actions, hidden, epsilon, rng)
        result = client.step(actions)
        obs = result["observations"]
        avail = result["avail_masks"]
        done = result["done"]
        if use_info_state:
            states.append([float(v) for v in result["info"]["state"]])
        else:
            states.append(_flatten(obs))
        obs_seq.append(obs)
        avail_seq.append(avail)
        actions_seq.append(actions)
        rewards.append(result["reward"])
        terminated.append(1.0 if done else 0.0)
        prev_actions = actions
    episode = make_episode(obs_seq, avail_seq, states, actions_seq, rewards, terminated)
    return episode, float(sum(rewards))


def _play_greedy(client: EnvClient, net, seed: int) -> float:
    payload = client.reset(seed)
    obs = payload["observations"]
    avail = payload["avail_masks"]
    hidden = net.init_hidden(net.n_agents)
    prev_actions = None
    total = 0.0
    done = False
    rng = np.random.default_rng(0)
    while not done:
        actions, hidden = select_actions(net, obs, avail, prev_actions, hidden, 0.0, rng)
        result = client.step(actions)
        obs = result["observations"]
        avail = result["avail_masks"]
        total += result["reward"]
        done = result["done"]
        prev_actions = actions
    return total


def _play_baseline(client: EnvClient, seed: int) -> float:
    client.reset(seed)
    total = 0.0
    done = False
    while not done:
        result = client.step()
        total += result["reward"]
        done = result["done"]
    return total


@dataclass
class EvalResult:
    mean: float
    std: float
    run_means: list[float]
    episodes: int


def evaluate_policy(client: EnvClient, net=None, runs: int = EVAL_RUNS,
                    timesteps: int = EVAL_TIMESTEPS, episode_length: int = 50,
                    base_seed: int = 0) -> EvalResult:
    """Fixed-budget greedy evaluation, mean and std over per-run means.

    With net None the client must have requested a server-side baseline in
    hello; steps are then sent without actions and the server plays its
    own policy, which makes the numbers directly comparable with the game
    CLI's evaluate command (same seed schedule, same aggregation).
    """
    episodes_per_run = max(1, math.ceil(timesteps / episode_length))
    run_means = []
    for run in range(runs):
        returns = []
        for episode in range(episodes_per_run):
            seed = base_seed + run * 10_000 + episode
            if net is None:
                returns.append(_play_baseline(client, seed))
            else:
                returns.append(_play_greedy(client, net, seed))
        run_means.append(statistics.fmean(returns))
    mean = statistics.fmean(run_means)
    std = statistics.stdev(run_means) if len(run_means) > 1 else 0.0
    return EvalResult(mean, std, run_means, episodes_per_run * runs)


def save_checkpoint(path: Path, config: TrainConfig, learner: Learner,
                    timesteps: int, episode_index: int, curve_rows: list) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    net = learner.net
    torch.save(
        {
            "format": 1,
            "config": config.to_dict(),
            "dims": {
                "obs_length": net.obs_dim,
                "action_space_size": net.n_actions,
                "n_agents": net.n_agents,
            },
            "timesteps": timesteps,
            "episode_index": episode_index,
            "curve_rows": curve_rows,
            "learner": learner.state_dict(),
        },
        path,
    )
    return path


def load_checkpoint(path: Path) -> dict:
    data = torch.load(path, weights_only=True)
    if data.get("format") != 1:
        raise ValueError(f"unrecognised checkpoint format in {path}")
    return data


def check_spaces(checkpoint: dict, spaces: dict) -> None:
    """Reject a checkpoint whose model does not fit the live spaces.

    Raises ValueError naming the first mismatching dimension.
    """
    for name, expected in checkpoint["dims"].items():
        actual = spaces[name]
        if actual != expected:
            raise ValueError(
                f"{name} mismatch: checkpoint was trained with {expected}, "
                f"server reports {actual}"
            )


def build_learner(config: TrainConfig, spaces: dict) -> Learner:
    obs_dim = spaces["obs_length"]
    n_actions = spaces["action_space_size"]
    n_agents = spaces["n_agents"]
    if config.use_info_state:
        state_dim = len(pristine_state(spaces))
    else:
        state_dim = n_agents * obs_dim
    return Learner(config, obs_dim, n_actions, n_agents, state_dim)


def _write_curve(path: Path, rows: list) -> None:
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["timestep", "mean_return", "std"])
        for timestep, mean, std in rows:
            writer.writerow([timestep, f"{mean:.4f}", f"{std:.4f}"])


def _plot_curve(path: Path, rows: list, title: str) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(7, 4))
    if rows:
        steps = [r[0] for r in rows]
        means = np.array([r[1] for r in rows])
        stds = np.array([r[2] for r in rows])
        ax.plot(steps, means, color="tab:blue")
        ax.fill_between(steps, means - stds, means + stds, color="tab:blue", alpha=0.2)
    ax.set_xlabel("environment timesteps")
    ax.set_ylabel("mean episode return")
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def write_scores(path: Path, scenario: str, policy: str, result: EvalResult) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        writer = csv.DictWriter(
            fh, fieldnames=["scenario", "policy", "mean_return", "std", "episodes"]
        )
        writer.writeheader()
        writer.writerow(
            {
                "scenario": scenario,
                "policy": policy,
                "mean_return": f"{result.mean:.4f}",
                "std": f"{result.std:.4f}",
                "episodes": result.episodes,
            }
        )


@dataclass
class TrainResult:
    config: TrainConfig
    timesteps: int
    episodes: int
    train_steps: int
    curve_rows: list
    curve_path: Path
    plot_path: Path
    checkpoint_path: Path
    scores_path: Path | None
    eval_result: EvalResult | None
    monotonicity_probes: list = field(default_factory=list)


def run_training(config: TrainConfig | None, out_dir: Path, client: EnvClient | None = None,
                 resume_from: Path | None = None, eval_runs: int = EVAL_RUNS,
                 eval_timesteps: int | None = EVAL_TIMESTEPS,
                 probe_interval: int = PROBE_INTERVAL) -> TrainResult:
    """Train one policy to the configured timestep budget.

    Alternates episode collection with gradient updates (one per collected
    episode once the buffer holds a full batch). Writes windowed learning
    curve rows, versioned checkpoints, and a final greedy score table.
    Resuming restores networks, counters, and curve rows from a checkpoint;
    replay contents are rebuilt from fresh play. A lost connection aborts
    with TrainingInterrupted carrying the checkpoint written on the way out.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    start_timesteps = 0
    start_episodes = 0
    curve_rows: list = []
    checkpoint_state = None
    if resume_from is not None:
        data = load_checkpoint(Path(resume_from))
        config = TrainConfig.from_dict(data["config"])
        start_timesteps = data["timesteps"]
        start_episodes = data["episode_index"]
        curve_rows = [tuple(row) for row in data["curve_rows"]]
        checkpoint_state = data["learner"]
    if config is None:
        raise ValueError("config is required unless resuming from a checkpoint")
    config.validate()

    torch.manual_seed(config.seed)
    rng = np.random.Generator(np.random.Philox(config.seed))
    own_client = client is None
    if own_client:
        client = spawn_client(config)
    try:
        spaces = client.hello()
        learner = build_learner(config, spaces)
        if checkpoint_state is not None:
            learner.load_state_dict(checkpoint_state)
        buffer = ReplayBuffer(config.buffer_size)
        timesteps = start_timesteps
        episode_index = start_episodes
        window: list[float] = []
        probes: list[tuple[int, float]] = []
        next_checkpoint_at = (timesteps // config.checkpoint_interval + 1) * config.checkpoint_interval

        def checkpoint(tag: int) -> Path:
            return save_checkpoint(
                out_dir / f"checkpoint_{tag:09d}.pt", config, learner,
                timesteps, episode_index, curve_rows,
            )

        try:
            while timesteps < config.total_timesteps:
                epsilon = config.epsilon_at(timesteps)
                seed = config.seed * 1_000_000 + episode_index
                episode, ep_return = collect_episode(
                    client, learner.net, spaces, seed, epsilon, rng, config.use_info_state
                )
                buffer.add(episode)
                timesteps += int(episode["rewards"].shape[0])
                episode_index += 1
                window.append(ep_return)
                if len(window) >= config.curve_window:
                    mean = statistics.fmean(window)
                    std = statistics.stdev(window) if len(window) > 1 else 0.0
                    curve_rows.append((timesteps, mean, std))
                    window = []
                metrics = learner.train_from(buffer, rng)
                if metrics is None:
                    log.debug("buffer below batch size; skipped update at %d steps", timesteps)
                elif (
                    learner.mixer is not None
                    and learner.train_steps % probe_interval == 0
                ):
                    probes.append(
                        (learner.train_steps, monotonicity_gap(learner.mixer, 200, rng))
                    )
                if timesteps >= next_checkpoint_at:
                    checkpoint(timesteps)
                    next_checkpoint_at += config.checkpoint_interval
        except ConnectionLost as exc:
            path = checkpoint(timesteps)
            raise TrainingInterrupted(path, exc) from exc

        final_checkpoint = checkpoint(timesteps)
        curve_path = out_dir / "curve.csv"
        _write_curve(curve_path, curve_rows)
        plot_path = out_dir / "curve.png"
        _plot_curve(
            plot_path, curve_rows, f"{config.algorithm} on {scenario_name(config)}"
        )

        eval_result = None
        scores_path = None
        if eval_timesteps:
            eval_result = evaluate_policy(
                client, learner.net, eval_runs, eval_timesteps, config.episode_length
            )
            scores_path = out_dir / "scores.csv"
            write_scores(scores_path, scenario_name(config), config.algorithm, eval_result)
        return TrainResult(
            config=config,
            timesteps=timesteps,
            episodes=episode_index,
            train_steps=learner.train_steps,
            curve_rows=curve_rows,
            curve_path=curve_path,
            plot_path=plot_path,
            checkpoint_path=final_checkpoint,
            scores_path=scores_path,
            eval_result=eval_result,
            monotonicity_probes=probes,
        )
    finally:
        if own_client:
            client.close()
