"""Fixed 16-cell hyperparameter sweep with per-cell seed repeats."""

from __future__ import annotations

import csv
import logging
import statistics
from pathlib import Path

from .config import TrainConfig, grid_cells
from .runner import run_training

log = logging.getLogger("marl_harness.grid")

DEFAULT_SEEDS = (0, 1, 2)


def grid_search(base: TrainConfig, out_dir: Path, seeds=DEFAULT_SEEDS,
                timesteps: int | None = None, runner=None, **runner_kwargs) -> list[dict]:
    """Run every cell of the sweep; a failed run is recorded, not fatal.

    `timesteps` overrides the per-run budget without changing the grid's
    shape, so the full sweep can be exercised cheaply. Returns the rows
    ranked by mean evaluation score (best first, unscored cells last) and
    writes them to grid.csv under out_dir.
    """
    if runner is None:
        runner = run_training
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rows = []
    for index, cell in enumerate(grid_cells(base)):
        scores: list[float | None] = []
        errors: list[str] = []
        for seed in seeds:
            data = cell.to_dict()
            data["seed"] = seed
            if timesteps is not None:
                data["total_timesteps"] = timesteps
            config = TrainConfig.from_dict(data)
            run_dir = out_dir / f"cell_{index:02d}" / f"seed_{seed}"
            try:
                result = runner(config, run_dir, **runner_kwargs)
                score = result.eval_result.mean if result.eval_result else None
                scores.append(score)
            except Exception as exc:  # a broken cell must not sink the sweep
                log.warning("cell %d seed %d failed: %s", index, seed, exc)
                scores.append(None)
                errors.append(f"seed {seed}: {exc}")
        valid = [s for s in scores if s is not None]
        rows.append(
            {
                "cell": index,
                "batch_size": cell.batch_size,
                "buffer_size": cell.buffer_size,
                "lr": cell.lr,
                "td_lambda": cell.td_lambda,
                "seed_scores": scores,
                "mean_score": statistics.fmean(valid) if valid else None,
                "status": "ok" if not errors else "; ".join(errors),
            }
        )
    rows.sort(key=lambda row: (row["mean_score"] is None, -(row["mean_score"] or 0.0)))
    for rank, row in enumerate(rows, start=1):
        row["rank"] = rank
    _write_grid(out_dir / "grid.csv", rows, seeds)
    return rows


def _write_grid(path: Path, rows: list[dict], seeds) -> None:
    fields = ["rank", "cell", "batch_size", "buffer_size", "lr", "td_lambda"]
    fields += [f"score_seed_{s}" for s in seeds]
    fields += ["mean_score", "status"]
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(fields)
        for row in rows:
            record = [
                row["rank"], row["cell"], row["batch_size"], row["buffer_size"],
                row["lr"], "none" if row["td_lambda"] is None else row["td_lambda"],
            ]
            record += ["" if s is None else f"{s:.4f}" for s in row["seed_scores"]]
            record.append("" if row["mean_score"] is None else f"{row['mean_score']:.4f}")
            record.append(row["status"])
            writer.writerow(record)
