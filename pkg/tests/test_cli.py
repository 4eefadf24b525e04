"""CLI behavior: flag precedence, exit codes, and the installed entry point."""

import json
import subprocess
import sys

import pytest

from beliefmesh.cli import main


def read_manifest(out_dir):
    return json.loads((out_dir / "manifest.json").read_text())


class TestExitCodes:
    def test_success_returns_zero(self, tmp_path, capsys):
        rc = main(["run", "tmaze", "--steps", "2", "--seed", "1", "--out", str(tmp_path / "r")])
        assert rc == 0
        out = capsys.readouterr().out
        assert "completed tmaze" in out
        assert "agent0.csv" in out

    def test_unknown_scenario_is_a_usage_error(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["run", "labyrinth"])
        assert exc.value.code == 2

    def test_invalid_field_returns_two(self, capsys):
        rc = main(["run", "tmaze", "--gamma", "0"])
        assert rc == 2
        assert "gamma" in capsys.readouterr().err

    def test_bad_config_file_returns_two(self, tmp_path, capsys):
        cfg = tmp_path / "exp.json"
        cfg.write_text(json.dumps({"scenario": "tmaze", "speed": 11}))
        rc = main(["run", "tmaze", "--config", str(cfg)])
        assert rc == 2
        assert "unknown key" in capsys.readouterr().err

    def test_missing_config_file_returns_two(self, tmp_path, capsys):
        rc = main(["run", "tmaze", "--config", str(tmp_path / "absent.json")])
        assert rc == 2

    def test_runtime_failure_returns_one(self, tmp_path, capsys):
        blocker = tmp_path / "blocked"
        blocker.write_text("a file where the out dir should go")
        rc = main(["run", "tmaze", "--steps", "1", "--out", str(blocker)])
        assert rc == 1
        assert "beliefmesh:" in capsys.readouterr().err


class TestPrecedence:
    def test_flags_override_config_file(self, tmp_path):
        cfg = tmp_path / "exp.json"
        cfg.write_text(json.dumps({"scenario": "tmaze", "steps": 4, "seed": 9}))
        out = tmp_path / "out"
        rc = main(
            ["run", "tmaze", "--config", str(cfg), "--steps", "2", "--out", str(out)]
        )
        assert rc == 0
        manifest = read_manifest(out)
        assert manifest["config"]["steps"] == 2  # flag wins
        assert manifest["config"]["seed"] == 9  # file survives where not overridden

    def test_positional_scenario_overrides_config_file(self, tmp_path):
        cfg = tmp_path / "exp.json"
        cfg.write_text(json.dumps({"scenario": "elephant", "agents": 3}))
        out = tmp_path / "out"
        rc = main(["run", "tmaze", "--config", str(cfg), "--steps", "1", "--out", str(out)])
        assert rc == 0
        assert read_manifest(out)["config"]["scenario"] == "tmaze"

    def test_no_share_flag(self, tmp_path):
        out = tmp_path / "out"
        rc = main(["run", "elephant", "--steps", "2", "--no-share", "--out", str(out)])
        assert rc == 0
        assert read_manifest(out)["config"]["share"] is False

    def test_elephant_defaults_to_three_agents(self, tmp_path, capsys):
        rc = main(["run", "elephant", "--steps", "1"])
        assert rc == 0
        assert "agents=3" in capsys.readouterr().out

    def test_share_and_no_share_conflict(self):
        with pytest.raises(SystemExit) as exc:
            main(["run", "elephant", "--share", "--no-share"])
        assert exc.value.code == 2


class TestOutput:
    def test_elephant_reports_final_synchrony(self, capsys):
        rc = main(["run", "elephant", "--steps", "2", "--seed", "0", "--noise", "0"])
        assert rc == 0
        assert "final mean pairwise synchrony" in capsys.readouterr().out

    def test_tmaze_reports_actions_and_outcome(self, capsys):
        rc = main(["run", "tmaze", "--steps", "2", "--seed", "1"])
        assert rc == 0
        out = capsys.readouterr().out
        assert "actions=3,1" in out
        assert "reward_side=0" in out

    def test_socket_transport_runs_from_the_cli(self, tmp_path):
        out = tmp_path / "out"
        rc = main(
            ["run", "elephant", "--steps", "2", "--transport", "socket", "--out", str(out)]
        )
        assert rc == 0
        assert (out / "agent2.csv").exists()


def test_module_entry_point_runs():
    proc = subprocess.run(
        [sys.executable, "-m", "beliefmesh", "run", "tmaze", "--steps", "1", "--seed", "0"],
        capture_output=True,
        text=True,
        timeout=120,
    )
    assert proc.returncode == 0, proc.stderr
    assert "completed tmaze" in proc.stdout


def test_console_script_is_installed():
    proc = subprocess.run(
        ["beliefmesh", "run", "tmaze", "--steps", "1", "--seed", "0"],
        capture_output=True,
        text=True,
        timeout=120,
    )
    assert proc.returncode == 0, proc.stderr
    assert "completed tmaze" in proc.stdout
