import csv
import json
import subprocess
import sys

import pytest

from cyrange.cli import main, make_parser


def run_cli(args, capsys):
    code = main(args)
    out, err = capsys.readouterr()
    return code, out, err


class TestRun:
    def test_writes_replays_and_results(self, tmp_path, capsys):
        out_dir = tmp_path / "out"
        code, out, _ = run_cli(
            [
                "run",
                "--goal",
                "availability",
                "--episodes",
                "3",
                "--blue",
                "heuristic",
                "--seed",
                "5",
                "--out",
                str(out_dir),
            ],
            capsys,
        )
        assert code == 0
        assert "availability heuristic" in out
        replays = sorted(out_dir.glob("episode_*.jsonl"))
        assert len(replays) == 3
        with (out_dir / "results.csv").open() as fh:
            rows = list(csv.DictReader(fh))
        assert rows[0]["scenario"] == "availability"
        assert rows[0]["policy"] == "heuristic"
        assert rows[0]["episodes"] == "3"
        assert float(rows[0]["mean_return"]) < 0

    def test_zero_episodes_is_usage_error(self):
        with pytest.raises(SystemExit) as excinfo:
            main(["run", "--episodes", "0"])
        assert excinfo.value.code == 2

    def test_config_file_with_overrides(self, tmp_path, capsys):
        cfg = tmp_path / "scenario.cfg"
        cfg.write_text("goal = integrity\nepisode_length = 10\n")
        code, out, _ = run_cli(
            ["run", "--config", str(cfg), "--episodes", "1", "--goal", "availability"],
            capsys,
        )
        assert code == 0
        assert out.startswith("availability")


class TestEvaluate:
    def test_reports_mean_and_std(self, tmp_path, capsys):
        code, out, _ = run_cli(
            [
                "evaluate",
                "--goal",
                "confidentiality",
                "--blue",
                "random",
                "--runs",
                "2",
                "--timesteps",
                "100",
                "--episode-length",
                "25",
                "--out",
                str(tmp_path),
            ],
            capsys,
        )
        assert code == 0
        assert "+/-" in out
        with (tmp_path / "results.csv").open() as fh:
            rows = list(csv.DictReader(fh))
        assert rows[0]["episodes"] == "8"  # 2 runs x ceil(100/25)


class TestReplayCommand:
    def test_verifies_and_flags_tampering(self, tmp_path, capsys):
        out_dir = tmp_path / "out"
        run_cli(
            ["run", "--episodes", "1", "--seed", "3", "--out", str(out_dir)], capsys
        )
        replay = next(out_dir.glob("episode_*.jsonl"))
        code, out, _ = run_cli(["replay", str(replay)], capsys)
        assert code == 0
        assert "verified" in out

        lines = replay.read_text().splitlines()
        footer = json.loads(lines[-1])
        footer["episode_return"] -= 2.5
        lines[-1] = json.dumps(footer)
        replay.write_text("\n".join(lines) + "\n")
        code, out, _ = run_cli(["replay", str(replay)], capsys)
        assert code == 1
        assert "MISMATCH" in out

    def test_missing_file_reports_cleanly(self, tmp_path, capsys):
        code, _, err = run_cli(["replay", str(tmp_path / "absent.jsonl")], capsys)
        assert code == 1
        assert "error" in err


class TestServeStdio:
    def test_protocol_session_over_pipe(self):
        script = "\n".join(
            json.dumps(msg)
            for msg in [
                {"kind": "hello", "payload": {}},
                {"kind": "reset", "payload": {"seed": 4}},
                {"kind": "step", "payload": {"actions": [0, 0]}},
                {"kind": "close", "payload": {}},
            ]
        )
        proc = subprocess.run(
            [sys.executable, "-m", "cyrange", "serve", "--stdio", "--goal", "integrity"],
            input=script + "\n",
            capture_output=True,
            text=True,
            timeout=60,
        )
        assert proc.returncode == 0
        replies = [json.loads(line) for line in proc.stdout.splitlines()]
        assert [r["kind"] for r in replies] == ["spaces", "obs", "step_result", "close"]
        assert replies[0]["payload"]["action_space_size"] == 21


class TestParser:
    def test_subcommand_required(self):
        with pytest.raises(SystemExit):
            make_parser().parse_args([])

    def test_serve_requires_transport(self):
        with pytest.raises(SystemExit):
            make_parser().parse_args(["serve"])

    def test_bad_goal_rejected(self):
        with pytest.raises(SystemExit):
            make_parser().parse_args(["run", "--goal", "world_peace"])
