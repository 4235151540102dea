"""Sweep shape, ranking, and failure tolerance of the hyperparameter grid."""

import csv
from types import SimpleNamespace

from marl_harness import TrainConfig, grid_cells, grid_search
from marl_harness.config import (
    GRID_BATCH_SIZES,
    GRID_BUFFER_SIZES,
    GRID_LEARNING_RATES,
    GRID_TD_LAMBDAS,
)

PRODUCT = [
    (batch, buffer, lr, lam)
    for batch in GRID_BATCH_SIZES
    for buffer in GRID_BUFFER_SIZES
    for lr in GRID_LEARNING_RATES
    for lam in GRID_TD_LAMBDAS
]


def base_config(**overrides):
    base = dict(algorithm="iql", goal="confidentiality", total_timesteps=1000, seed=0)
    base.update(overrides)
    return TrainConfig(**base)


def combo(config):
    return (config.batch_size, config.buffer_size, config.lr, config.td_lambda)


class TestGridCells:
    def test_sixteen_unique_cells_cover_the_product(self):
        cells = grid_cells(base_config())
        assert len(cells) == 16
        assert [combo(c) for c in cells] == PRODUCT

    def test_cells_inherit_base_fields(self):
        base = base_config(algorithm="qmix", goal="availability", misinform=True)
        for cell in grid_cells(base):
            assert cell.algorithm == "qmix"
            assert cell.goal == "availability"
            assert cell.misinform is True
            assert cell.total_timesteps == base.total_timesteps


class RecordingRunner:
    """Stand-in for run_training that scores each combo deterministically."""

    def __init__(self, fail_combo=None):
        self.calls = []
        self.fail_combo = fail_combo
        self._scores = {c: float(i) for i, c in enumerate(PRODUCT)}

    def __call__(self, config, run_dir, **kwargs):
        self.calls.append((config, run_dir))
        if self.fail_combo is not None and combo(config) == self.fail_combo:
            raise ValueError("boom")
        return SimpleNamespace(
            eval_result=SimpleNamespace(mean=self._scores[combo(config)])
        )


class TestGridSearch:
    def test_runs_every_cell_three_times_and_ranks(self, tmp_path):
        runner = RecordingRunner()
        rows = grid_search(
            base_config(), tmp_path, seeds=(0, 1, 2), timesteps=777, runner=runner
        )
        assert len(runner.calls) == 48
        seeds_seen = [config.seed for config, _ in runner.calls]
        assert seeds_seen == [0, 1, 2] * 16
        assert all(config.total_timesteps == 777 for config, _ in runner.calls)

        assert len(rows) == 16
        assert rows[0]["rank"] == 1
        assert combo_row(rows[0]) == PRODUCT[-1]
        assert combo_row(rows[-1]) == PRODUCT[0]
        assert all(row["status"] == "ok" for row in rows)

    def test_failed_cell_is_recorded_and_ranked_last(self, tmp_path):
        target = PRODUCT[5]
        runner = RecordingRunner(fail_combo=target)
        rows = grid_search(
            base_config(), tmp_path, seeds=(0, 1), timesteps=10, runner=runner
        )
        assert len(rows) == 16
        failed = [row for row in rows if row["status"] != "ok"]
        assert len(failed) == 1
        assert combo_row(failed[0]) == target
        assert failed[0]["mean_score"] is None
        assert failed[0]["rank"] == 16
        assert "boom" in failed[0]["status"]
        assert "seed 0" in failed[0]["status"]

        with (tmp_path / "grid.csv").open() as fh:
            records = list(csv.DictReader(fh))
        assert len(records) == 16
        assert records[0]["rank"] == "1"
        failed_record = [r for r in records if r["status"] != "ok"][0]
        assert failed_record["score_seed_0"] == ""
        assert failed_record["mean_score"] == ""

    def test_lambda_none_spelled_out_in_csv(self, tmp_path):
        grid_search(base_config(), tmp_path, seeds=(0,), timesteps=10,
                    runner=RecordingRunner())
        with (tmp_path / "grid.csv").open() as fh:
            values = {row["td_lambda"] for row in csv.DictReader(fh)}
        assert values == {"none", "0.6"}

    def test_live_sweep_end_to_end(self, tmp_path):
        """Tiny-budget sweep with the real trainer: 16 cells, one seed."""
        base = base_config(hidden_dim=8, mixing_embed_dim=4, curve_window=2)
        rows = grid_search(
            base, tmp_path, seeds=(0,), timesteps=60, eval_runs=1, eval_timesteps=50
        )
        assert len(rows) == 16
        assert all(row["status"] == "ok" for row in rows)
        assert all(row["mean_score"] is not None for row in rows)
        scores = [row["mean_score"] for row in rows]
        assert scores == sorted(scores, reverse=True)
        assert (tmp_path / "cell_00" / "seed_0" / "curve.csv").exists()


def combo_row(row):
    return (row["batch_size"], row["buffer_size"], row["lr"], row["td_lambda"])
