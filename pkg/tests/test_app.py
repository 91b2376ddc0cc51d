"""
Test cases for Command-Line Entry Point

This module contains pytest test cases to validate exit codes, artifact
layout, command-line overrides and the handling of aborted commands.
"""

import json

import pytest

from src.cli import app
from src.cli.app import EXIT_CHECK_FAILED, EXIT_CONFIG_INVALID, EXIT_OK, CommandResult, enforce, main, run
from src.cli.config import ExperimentConfig
from src.cli.reports import make_check
from src.harmonic_analysis.exceptions import CheckFailed, GridTooCoarse


@pytest.fixture
def raw_config():
    """Small rank-one configuration."""
    return {
        "experiment_id": "cli",
        "root_system": {"preset": "rank1", "k": 1.0},
        "grid": {"extent": 8.0, "points": 64},
        "ladder": {"t_min": 0.01, "t_max": 4.0, "count": 8},
        "workers": 1,
    }


@pytest.fixture
def smoke_config():
    """Small configuration every command can finish on."""
    return {
        "experiment_id": "smoke",
        "root_system": {"preset": "rank1", "k": 1.0},
        "grid": {"extent": 8.0, "points": 128},
        "ladder": {"t_min": 0.01, "t_max": 4.0, "count": 8},
        "suite": {"refine": False},
        "atoms": {"count": 3},
        "decomposition": {"extent": 16.0, "points": 128},
        "workers": 1,
    }


@pytest.fixture
def config_path(tmp_path, raw_config):
    """Configuration written to a JSON file."""
    path = tmp_path / "config.json"
    path.write_text(json.dumps(raw_config))
    return path


class TestMain:
    """Test cases for main function."""

    def test_missing_grid(self, tmp_path, raw_config, capsys):
        """Test exit code 2 and the offending path on stderr."""
        del raw_config["grid"]
        path = tmp_path / "config.json"
        path.write_text(json.dumps(raw_config))
        assert main(["kernel-bounds", "--config", str(path), "--outdir", str(tmp_path / "runs")]) == EXIT_CONFIG_INVALID
        assert "$.grid" in capsys.readouterr().err

    def test_missing_file(self, tmp_path):
        """Test exit code 2 for a configuration file that does not exist."""
        assert main(["kernel-bounds", "--config", str(tmp_path / "absent.json")]) == EXIT_CONFIG_INVALID

    def test_invalid_root_system(self, tmp_path, raw_config, capsys):
        """Test exit code 2 when the root system cannot be built."""
        raw_config["root_system"] = {"preset": "dihedral:3", "k": [0.5, 1.0]}
        path = tmp_path / "config.json"
        path.write_text(json.dumps(raw_config))
        assert main(["kernel-bounds", "--config", str(path)]) == EXIT_CONFIG_INVALID
        assert "$.root_system" in capsys.readouterr().err

    def test_unknown_command(self, config_path):
        """Test that argparse refuses an unknown command."""
        with pytest.raises(SystemExit):
            main(["fourier-bounds", "--config", str(config_path)])

    def test_kernel_bounds_run(self, tmp_path, config_path):
        """Test a passing run, its artifacts and the seed override."""
        outdir = tmp_path / "runs"
        status = main(["kernel-bounds", "--config", str(config_path), "--outdir", str(outdir), "--seed", "5"])
        assert status == EXIT_OK
        run_dir = outdir / "kernel-bounds" / "cli"
        report = json.loads((run_dir / "report.json").read_text())
        assert report["passed"] is True
        assert report["seed"] == 5
        assert report["config"]["grid"]["points"] == 64
        assert (run_dir / "kernel_bounds.csv").exists()
        assert (run_dir / "growth.csv").exists()
        assert (run_dir / "report.xlsx").exists()
        assert (outdir / "runs.xlsx").exists()


EXPECTED_TABLES = {
    "kernel-bounds": ["kernel_bounds", "growth"],
    "heat-bounds": ["heat_bounds"],
    "poisson-bounds": ["poisson_bounds", "subordination"],
    "norm-table": ["norms"],
    "cr-check": ["residuals"],
    "subharmonicity-sweep": ["q_sweep"],
    "riesz-atom-bounds": ["atoms", "atoms_refined"],
    "square-atom-bounds": ["atoms", "atoms_refined"],
    "atomic-decompose": ["coefficients", "atom_values"],
    "calderon-check": ["calderon"],
    "selftest": ["selftest"],
}


class TestCommands:
    """Test cases running every command end to end on a small grid."""

    def test_every_command_has_expected_tables(self):
        """Test that the table list covers every registered command."""
        assert set(EXPECTED_TABLES) == set(app.COMMANDS)

    @pytest.mark.parametrize("command", sorted(EXPECTED_TABLES))
    def test_command_runs(self, tmp_path, smoke_config, command):
        """Test that a command finishes with exit code 0 or 1 and writes its report and tables."""
        status = run(ExperimentConfig.from_dict(smoke_config), command, str(tmp_path))
        assert status in (EXIT_OK, EXIT_CHECK_FAILED)
        run_dir = tmp_path / command / "smoke"
        report = json.loads((run_dir / "report.json").read_text())
        assert report["command"] == command
        assert (run_dir / "report.xlsx").exists()
        assert (tmp_path / "runs.xlsx").exists()
        assert report["passed"] == (status == EXIT_OK)
        if report["error"] is None:
            assert report["checks"]
            assert set(EXPECTED_TABLES[command]) <= set(report["tables"])
            for filename in report["tables"].values():
                assert (run_dir / filename).exists()

    def test_run_is_deterministic(self, tmp_path, smoke_config):
        """Test that two runs with the same config and seed agree outside the metadata block."""
        smoke_config["workers"] = 2
        reports, tables = [], []
        for name in ("first", "second"):
            run(ExperimentConfig.from_dict(smoke_config), "kernel-bounds", str(tmp_path / name))
            run_dir = tmp_path / name / "kernel-bounds" / "smoke"
            report = json.loads((run_dir / "report.json").read_text())
            report.pop("metadata", None)
            reports.append(report)
            tables.append((run_dir / "kernel_bounds.csv").read_text())
        assert reports[0] == reports[1]
        assert tables[0] == tables[1]


class TestRun:
    """Test cases for run and enforce functions."""

    def test_aborted_command(self, tmp_path, raw_config, monkeypatch):
        """Test that a library error yields exit code 1 and an error report."""
        def abort(cfg):
            raise GridTooCoarse("radius spans 3 grid steps")

        monkeypatch.setitem(app.COMMANDS, "selftest", abort)
        cfg = ExperimentConfig.from_dict(raw_config)
        assert run(cfg, "selftest", str(tmp_path)) == EXIT_CHECK_FAILED
        report = json.loads((tmp_path / "selftest" / "cli" / "report.json").read_text())
        assert report["error"].startswith("GridTooCoarse")
        assert report["passed"] is False

    def test_failed_check(self, tmp_path, raw_config, monkeypatch):
        """Test that a failing check yields exit code 1 after the artifacts are written."""
        monkeypatch.setitem(app.COMMANDS, "selftest",
                            lambda cfg: CommandResult([make_check("inversion", 1e-3, 1e-6)]))
        cfg = ExperimentConfig.from_dict(raw_config)
        assert run(cfg, "selftest", str(tmp_path)) == EXIT_CHECK_FAILED
        report = json.loads((tmp_path / "selftest" / "cli" / "report.json").read_text())
        assert report["failed_checks"] == ["inversion"]

    def test_unknown_command(self, raw_config):
        """Test that run refuses an unknown command."""
        with pytest.raises(ValueError):
            run(ExperimentConfig.from_dict(raw_config), "fourier-bounds")

    def test_enforce(self):
        """Test that enforce names the first failing check."""
        result = CommandResult([make_check("ok", 0.0, 1.0), make_check("bad", 2.0, 1.0)])
        with pytest.raises(CheckFailed) as info:
            enforce(result)
        assert info.value.check == "bad"
        enforce(CommandResult([make_check("ok", 0.0, 1.0)]))
