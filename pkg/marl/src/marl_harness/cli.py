"""Command line front end: train, evaluate, grid."""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

from .client import EnvClient
from .config import ALGORITHMS, GOALS, TrainConfig, TrainConfigError
from .grid import DEFAULT_SEEDS, grid_search
from .runner import (
    EVAL_RUNS,
    EVAL_TIMESTEPS,
    build_learner,
    check_spaces,
    evaluate_policy,
    load_checkpoint,
    run_training,
    scenario_name,
    write_scores,
)

log = logging.getLogger("marl_harness")

BASELINES = ("heuristic", "random", "passive")

# argparse runs string defaults through the type converter, so the
# "flag not given" marker must not be a string
_UNSET = object()


def _positive(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return value


def _td_lambda(text: str):
    if text.lower() == "none":
        return None
    return float(text)


def _seed_list(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(part) for part in text.split(","))
    except ValueError as exc:
        raise argparse.ArgumentTypeError("seeds must be comma-separated integers") from exc


def _add_train_args(parser: argparse.ArgumentParser, sweep: bool) -> None:
    parser.add_argument("--algorithm", choices=ALGORITHMS, default="iql")
    parser.add_argument("--goal", choices=GOALS, default="confidentiality")
    parser.add_argument("--misinform", action="store_true")
    parser.add_argument("--timesteps", type=_positive, default=None,
                        help="total environment timesteps")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--use-info-state", action="store_true",
                        help="mix on ground-truth state instead of joined observations")
    parser.add_argument("--out", type=Path, required=True)
    parser.add_argument("--eval-runs", type=_positive, default=EVAL_RUNS)
    parser.add_argument("--eval-timesteps", type=_positive, default=EVAL_TIMESTEPS)
    if not sweep:
        parser.add_argument("--batch-size", type=_positive, default=None)
        parser.add_argument("--buffer-size", type=_positive, default=None)
        parser.add_argument("--lr", type=float, default=None)
        parser.add_argument("--td-lambda", type=_td_lambda, default=_UNSET,
                            help="lambda return weight, or 'none' for one-step targets")
        parser.add_argument("--resume", type=Path, help="checkpoint to continue from")


def _config_from_args(args: argparse.Namespace) -> TrainConfig:
    config = TrainConfig(
        algorithm=args.algorithm,
        goal=args.goal,
        misinform=args.misinform,
        seed=args.seed,
        use_info_state=args.use_info_state,
    )
    if args.timesteps is not None:
        config.total_timesteps = args.timesteps
    for name, attr in (("batch_size", "batch_size"), ("buffer_size", "buffer_size"),
                       ("lr", "lr")):
        value = getattr(args, attr, None)
        if value is not None:
            setattr(config, name, value)
    td = getattr(args, "td_lambda", _UNSET)
    if td is not _UNSET:
        config.td_lambda = td
    config.validate()
    return config


def cmd_train(args: argparse.Namespace) -> int:
    if args.resume:
        result = run_training(None, args.out, resume_from=args.resume,
                              eval_runs=args.eval_runs, eval_timesteps=args.eval_timesteps)
    else:
        result = run_training(_config_from_args(args), args.out,
                              eval_runs=args.eval_runs, eval_timesteps=args.eval_timesteps)
    line = f"{scenario_name(result.config)} {result.config.algorithm}: "
    if result.eval_result:
        line += f"mean {result.eval_result.mean:.2f} +/- {result.eval_result.std:.2f}, "
    line += f"{result.timesteps} timesteps, checkpoint {result.checkpoint_path}"
    print(line)
    return 0


def cmd_evaluate(args: argparse.Namespace) -> int:
    if bool(args.checkpoint) == bool(args.baseline):
        raise SystemExit("evaluate needs exactly one of --checkpoint or --baseline")
    if args.checkpoint:
        data = load_checkpoint(args.checkpoint)
        config = TrainConfig.from_dict(data["config"])
        policy_name = config.algorithm
        with EnvClient.spawn(goal=config.goal, misinform=config.misinform,
                             episode_length=config.episode_length) as client:
            spaces = client.hello()
            check_spaces(data, spaces)
            learner = build_learner(config, spaces)
            learner.load_state_dict(data["learner"])
            result = evaluate_policy(
                client, learner.net, args.runs, args.timesteps,
                config.episode_length, args.base_seed,
            )
        scenario = scenario_name(config)
    else:
        policy_name = args.baseline
        with EnvClient.spawn(goal=args.goal, misinform=args.misinform,
                             episode_length=args.episode_length) as client:
            client.hello(baseline=args.baseline)
            result = evaluate_policy(
                client, None, args.runs, args.timesteps,
                args.episode_length, args.base_seed,
            )
        scenario = args.goal + ("+misinform" if args.misinform else "")
    episodes_per_run = result.episodes // args.runs
    print(
        f"{scenario} {policy_name}: mean {result.mean:.2f} +/- {result.std:.2f} "
        f"({args.runs} runs x {episodes_per_run} episodes)"
    )
    if args.out:
        write_scores(args.out / "scores.csv", scenario, policy_name, result)
    return 0


def cmd_grid(args: argparse.Namespace) -> int:
    base = TrainConfig(
        algorithm=args.algorithm,
        goal=args.goal,
        misinform=args.misinform,
        seed=args.seed,
        use_info_state=args.use_info_state,
    )
    rows = grid_search(base, args.out, seeds=args.seeds, timesteps=args.timesteps,
                       eval_runs=args.eval_runs, eval_timesteps=args.eval_timesteps)
    failed = sum(1 for row in rows if row["status"] != "ok")
    print(f"grid complete: {len(rows)} cells, {failed} with failures, table {args.out / 'grid.csv'}")
    return 0


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="marl-harness",
        description="recurrent Q-learning over the subnet defence wire protocol",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="train one policy and emit curve, checkpoints, scores")
    _add_train_args(p_train, sweep=False)
    p_train.set_defaults(func=cmd_train)

    p_eval = sub.add_parser("evaluate", help="greedy evaluation of a checkpoint or server baseline")
    p_eval.add_argument("--checkpoint", type=Path)
    p_eval.add_argument("--baseline", choices=BASELINES)
    p_eval.add_argument("--goal", choices=GOALS, default="confidentiality")
    p_eval.add_argument("--misinform", action="store_true")
    p_eval.add_argument("--episode-length", type=_positive, default=50)
    p_eval.add_argument("--runs", type=_positive, default=EVAL_RUNS)
    p_eval.add_argument("--timesteps", type=_positive, default=EVAL_TIMESTEPS)
    p_eval.add_argument("--base-seed", type=int, default=0)
    p_eval.add_argument("--out", type=Path)
    p_eval.set_defaults(func=cmd_evaluate)

    p_grid = sub.add_parser("grid", help="run the fixed 16-cell hyperparameter sweep")
    _add_train_args(p_grid, sweep=True)
    p_grid.add_argument("--seeds", type=_seed_list, default=DEFAULT_SEEDS)
    p_grid.set_defaults(func=cmd_grid)

    return parser


def main(argv: list[str] | None = None) -> int:
    level = os.environ.get("MARL_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(asctime)s %(name)s %(levelname)s %(message)s")
    parser = make_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except TrainConfigError as exc:
        parser.error(str(exc))
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
