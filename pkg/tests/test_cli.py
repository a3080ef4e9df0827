"""
Command Line Tests
==================

Exit codes, overrides and written artifacts of the run, sweep and analyze
subcommands.
"""

import json

import pytest

from cosim.cli import (EXIT_INVALID, EXIT_NON_CONVERGENCE, EXIT_OK, apply_overrides,
                       build_parser, main)
from cosim.config import RelaxationKind, Scheme
from cosim.run_log import RUN_LOG_NAME
from cosim.scenario import load_scenario


class TestOverrides:
    """Test flag overrides of scenario keys"""

    def test_scheme_and_tolerance(self):
        args = build_parser().parse_args(["run", "-s", "events", "--scheme", "ecs",
                                          "--eps-rel", "1e-6", "--alpha", "0.25"])
        scenario = apply_overrides(load_scenario("events"), args)
        assert scenario.coupling.scheme is Scheme.ECS_GAUSS_SEIDEL
        assert scenario.coupling.tolerance == 1.0e-6
        assert scenario.coupling.event_relaxation == 0.25

    def test_relaxation(self):
        args = build_parser().parse_args(["run", "-s", "stability-ics", "--relaxation", "secant",
                                          "--omega", "0.4"])
        scenario = apply_overrides(load_scenario("stability-ics"), args)
        assert scenario.coupling.relaxation.kind is RelaxationKind.SECANT
        assert scenario.coupling.relaxation.omega == 0.4

    def test_dt_clamps_micro_step(self):
        args = build_parser().parse_args(["run", "-s", "stability-ics", "--dt", "50"])
        scenario = apply_overrides(load_scenario("stability-ics"), args)
        assert scenario.coupling.macro_step == 50.0
        assert all(s.micro_step == 50.0 for s in scenario.solvers)

    def test_dt_keeps_finer_micro_step(self):
        args = build_parser().parse_args(["run", "-s", "events", "--dt", "50"])
        scenario = apply_overrides(load_scenario("events"), args)
        assert all(s.micro_step == 1.0 for s in scenario.solvers)

    def test_scenario_file_untouched(self):
        args = build_parser().parse_args(["run", "-s", "events", "--dt", "50"])
        apply_overrides(load_scenario("events"), args)
        assert load_scenario("events").coupling.macro_step == 100.0


class TestExitCodes:
    """Test exit codes of the entry point"""

    def test_run(self, output_dir, capsys):
        assert main(["run", "-s", "stability-ics", "--out", str(output_dir)]) == EXIT_OK
        assert (output_dir / "series.csv").exists()
        assert (output_dir / RUN_LOG_NAME).exists()
        assert "Run Summary" in capsys.readouterr().out

    def test_default_output_dir_from_environment(self, tmp_path, monkeypatch):
        monkeypatch.setenv("COSIM_OUTPUT_DIR", str(tmp_path / "env"))
        assert main(["run", "-s", "stability-ecs"]) == EXIT_OK
        assert (tmp_path / "env" / "stability-ecs" / "summary.json").exists()

    def test_unknown_scenario(self, capsys):
        assert main(["run", "-s", "no-such-scenario"]) == EXIT_INVALID
        assert "Invalid scenario" in capsys.readouterr().out

    def test_invalid_override(self, output_dir):
        assert main(["run", "-s", "events", "--eps-rel", "-1", "--out", str(output_dir)]) == EXIT_INVALID

    def test_non_convergence(self, output_dir, capsys):
        code = main(["run", "-s", "stability-ics", "--omega", "1.9", "--out", str(output_dir)])
        assert code == EXIT_NON_CONVERGENCE
        assert "did not converge" in capsys.readouterr().out
        kinds = [json.loads(line)["kind"] for line in
                 (output_dir / RUN_LOG_NAME).read_text().splitlines()]
        assert kinds[-1] == "non_convergence"

    def test_missing_scenario_flag(self):
        with pytest.raises(SystemExit) as exc:
            main(["run"])
        assert exc.value.code == 2

    def test_bad_grid(self, output_dir):
        code = main(["sweep", "-s", "stability-ecs", "--param", "dt", "--grid", "a,b",
                     "--out", str(output_dir)])
        assert code == EXIT_INVALID


class TestSubcommands:
    """Test sweep and analyze"""

    def test_sweep(self, output_dir, capsys):
        code = main(["sweep", "-s", "stability-ecs", "--param", "dt", "--grid", "100,50",
                     "--out", str(output_dir)])
        assert code == EXIT_OK
        lines = (output_dir / "sweep.csv").read_text().splitlines()
        assert len(lines) == 3
        assert "Sweep Summary" in capsys.readouterr().out

    def test_analyze_json(self, tmp_path):
        path = tmp_path / "out" / "diagnostics.json"
        assert main(["analyze", "-s", "stability-ics", "--json", str(path)]) == EXIT_OK
        result = json.loads(path.read_text())
        assert result["r12"] == pytest.approx(0.94, abs=1e-3)
        assert result["hbar_crit"] == pytest.approx(1.702, abs=1e-3)
