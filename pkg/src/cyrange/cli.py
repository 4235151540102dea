"""Command line front end: run, evaluate, serve, replay."""

from __future__ import annotations

import argparse
import csv
import logging
import math
import os
import statistics
import sys
from pathlib import Path

from .baselines import make_policies
from .engine import run_episode
from .errors import ConfigError
from .replay import verify_replay
from .world import Goal, ScenarioConfig

log = logging.getLogger("cyrange")

EVAL_TIMESTEPS = 1000
EVAL_RUNS = 5


def _positive(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return value


def _add_scenario_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", type=Path, help="scenario file (key = value lines)")
    parser.add_argument("--goal", choices=[g.value for g in Goal])
    parser.add_argument("--misinform", action="store_true", default=None,
                        help="enable decoy planting")
    parser.add_argument("--episode-length", type=_positive)
    parser.add_argument("--seed", type=int)


def build_config(args: argparse.Namespace) -> ScenarioConfig:
    if args.config:
        config = ScenarioConfig.from_file(args.config)
    else:
        config = ScenarioConfig()
    overrides = {
        "goal": Goal(args.goal) if args.goal else None,
        "misinform_enabled": args.misinform,
        "episode_length": args.episode_length,
        "seed": args.seed,
    }
    for name, value in overrides.items():
        if value is not None:
            setattr(config, name, value)
    config.validate()
    return config


def scenario_name(config: ScenarioConfig) -> str:
    return config.goal.value + ("+misinform" if config.misinform_enabled else "")


def _write_results(path: Path, rows: list[dict]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        writer = csv.DictWriter(
            fh, fieldnames=["scenario", "policy", "mean_return", "std", "episodes"]
        )
        writer.writeheader()
        writer.writerows(rows)


def cmd_run(args: argparse.Namespace) -> int:
    config = build_config(args)
    policies = make_policies(args.blue)
    returns = []
    for i in range(args.episodes):
        replay_path = args.out / f"episode_{i:04d}.jsonl" if args.out else None
        record = run_episode(config, config.seed + i, policies, replay_path)
        returns.append(record.episode_return)
        log.info("episode %d seed %d return %.3f", i, config.seed + i, record.episode_return)
    mean = statistics.fmean(returns)
    std = statistics.stdev(returns) if len(returns) > 1 else 0.0
    row = {
        "scenario": scenario_name(config),
        "policy": args.blue,
        "mean_return": f"{mean:.4f}",
        "std": f"{std:.4f}",
        "episodes": len(returns),
    }
    if args.out:
        _write_results(args.out / "results.csv", [row])
    print(f"{row['scenario']} {args.blue}: mean {mean:.2f} +/- {std:.2f} over {len(returns)} episodes")
    return 0


def cmd_evaluate(args: argparse.Namespace) -> int:
    config = build_config(args)
    episodes_per_run = max(1, math.ceil(args.timesteps / config.episode_length))
    run_means = []
    for run in range(args.runs):
        policies = make_policies(args.blue)
        returns = []
        for episode in range(episodes_per_run):
            seed = config.seed + run * 10_000 + episode
            returns.append(run_episode(config, seed, policies).episode_return)
        run_means.append(statistics.fmean(returns))
        log.info("run %d mean return %.3f", run, run_means[-1])
    mean = statistics.fmean(run_means)
    std = statistics.stdev(run_means) if len(run_means) > 1 else 0.0
    row = {
        "scenario": scenario_name(config),
        "policy": args.blue,
        "mean_return": f"{mean:.4f}",
        "std": f"{std:.4f}",
        "episodes": episodes_per_run * args.runs,
    }
    if args.out:
        _write_results(args.out / "results.csv", [row])
    print(
        f"{row['scenario']} {args.blue}: mean {mean:.2f} +/- {std:.2f} "
        f"({args.runs} runs x {episodes_per_run} episodes)"
    )
    return 0


def cmd_serve(args: argparse.Namespace) -> int:
    from .server import serve_stdio, serve_tcp

    config = build_config(args)
    include_info = not args.no_info
    if args.stdio:
        serve_stdio(config, include_info)
    else:
        serve_tcp(config, args.host, args.port, include_info)
    return 0


def cmd_replay(args: argparse.Namespace) -> int:
    failures = 0
    for path in args.paths:
        result = verify_replay(path)
        if result.ok:
            print(f"{path}: verified, return {result.episode_return:.4f}")
        else:
            failures += 1
            print(f"{path}: MISMATCH")
            for line in result.mismatches:
                print(f"  {line}")
    return 1 if failures else 0


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cyrange", description="two-subnet cyber defence game"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="play scripted episodes, optionally recording replays")
    _add_scenario_args(p_run)
    p_run.add_argument("--episodes", type=_positive, default=1)
    p_run.add_argument("--blue", choices=["heuristic", "random", "passive"], default="heuristic")
    p_run.add_argument("--out", type=Path, help="directory for replays and results.csv")
    p_run.set_defaults(func=cmd_run)

    p_eval = sub.add_parser("evaluate", help="fixed-budget evaluation with mean and std over runs")
    _add_scenario_args(p_eval)
    p_eval.add_argument("--blue", choices=["heuristic", "random", "passive"], default="heuristic")
    p_eval.add_argument("--runs", type=_positive, default=EVAL_RUNS)
    p_eval.add_argument("--timesteps", type=_positive, default=EVAL_TIMESTEPS)
    p_eval.add_argument("--out", type=Path)
    p_eval.set_defaults(func=cmd_evaluate)

    p_serve = sub.add_parser("serve", help="serve the JSON-lines protocol")
    _add_scenario_args(p_serve)
    transport = p_serve.add_mutually_exclusive_group(required=True)
    transport.add_argument("--stdio", action="store_true")
    transport.add_argument("--port", type=int)
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--no-info", action="store_true",
                         help="omit ground-truth info from step replies")
    p_serve.set_defaults(func=cmd_serve)

    p_replay = sub.add_parser("replay", help="verify replay files against the reward rescorer")
    p_replay.add_argument("paths", nargs="+", type=Path)
    p_replay.set_defaults(func=cmd_replay)

    return parser


def main(argv: list[str] | None = None) -> int:
    level = os.environ.get("CYRANGE_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(asctime)s %(name)s %(levelname)s %(message)s")
    parser = make_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        parser.error(str(exc))
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
