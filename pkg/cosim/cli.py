"""
Co-simulation Command Line
==========================

Subcommands `run`, `sweep` and `analyze` over scenario files. Flags override
the matching scenario keys for one invocation; the scenario file itself is
never modified.
"""

import argparse
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional

from .config import RelaxationKind, RunSettings, Scheme, SweepParameter
from .errors import ConfigurationError, FieldValidationError, NonConvergenceError
from .harness import diagnostics, run, sweep
from .reporting import print_diagnostics, print_run_summary, print_sweep_summary, write_json
from .run_log import RunEventLogger
from .scenario import BUILTIN_SCENARIOS, Scenario, load_scenario, parse_scenario

logger = logging.getLogger("cosim.cli")

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_NON_CONVERGENCE = 3

SCHEME_CHOICES = {
    "ecs": Scheme.ECS_GAUSS_SEIDEL,
    "ecs-jacobi": Scheme.ECS_JACOBI,
    "ics": Scheme.ICS,
}


def _add_scenario_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--scenario", "-s", required=True,
                        help=f"Scenario file or built-in name ({', '.join(BUILTIN_SCENARIOS)})")
    parser.add_argument("--scheme", choices=list(SCHEME_CHOICES), help="Override the coupling scheme")
    parser.add_argument("--dt", type=float, help="Override the macro step [s]")
    parser.add_argument("--omega", type=float, help="Override the (initial) relaxation factor")
    parser.add_argument("--relaxation", choices=[k.value for k in RelaxationKind],
                        help="Override the relaxation strategy")
    parser.add_argument("--eps-rel", type=float, dest="eps_rel",
                        help="Override the relative interface tolerance")
    parser.add_argument("--alpha", type=float, help="Override the event-horizon relaxation")
    parser.add_argument("--seed", type=int, help="Reserved; runs are deterministic")
    parser.add_argument("--verbose", "-v", action="store_true", help="Enable verbose output")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cosim",
        description="Co-simulation of coupled lumped-parameter thermal models",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  python run_cosim.py run --scenario events                       # Built-in event scenario
  python run_cosim.py run --scenario events --scheme ecs --dt 50  # Explicit coupling, smaller step
  python run_cosim.py sweep --scenario stability-ics --param omega --grid 0.3,0.6,0.9
  python run_cosim.py analyze --scenario stability-ecs --json diagnostics.json
        """
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_parser = sub.add_parser("run", help="Run one scenario")
    _add_scenario_flags(run_parser)
    run_parser.add_argument("--out", "-o", help="Output directory")

    sweep_parser = sub.add_parser("sweep", help="Run a scenario over a parameter grid")
    _add_scenario_flags(sweep_parser)
    sweep_parser.add_argument("--param", "-p", required=True,
                              choices=[p.value for p in SweepParameter], help="Swept parameter")
    sweep_parser.add_argument("--grid", "-g", required=True,
                              help="Comma-separated grid values, e.g. 100,50,25,10")
    sweep_parser.add_argument("--workers", "-w", type=int, help="Concurrent grid points")
    sweep_parser.add_argument("--out", "-o", help="Output directory")

    analyze_parser = sub.add_parser("analyze", help="Closed-form stability diagnostics only")
    _add_scenario_flags(analyze_parser)
    analyze_parser.add_argument("--json", help="Write the diagnostics JSON to this path")
    return parser


def apply_overrides(scenario: Scenario, args: argparse.Namespace) -> Scenario:
    """Scenario with the command-line overrides applied, re-validated"""
    data: Dict[str, Any] = scenario.to_dict()
    coupling = data["coupling"]
    if args.scheme:
        coupling["scheme"] = SCHEME_CHOICES[args.scheme].value
    if args.dt is not None:
        coupling["macro_step"] = args.dt
        for solver in data["solvers"]:
            if solver["kind"] == "lumped" and solver.get("micro_step") and solver["micro_step"] > args.dt:
                solver["micro_step"] = args.dt
    if args.omega is not None:
        coupling["relaxation"]["omega"] = args.omega
    if args.relaxation:
        coupling["relaxation"]["kind"] = args.relaxation
    if args.eps_rel is not None:
        coupling["tolerance"] = args.eps_rel
    if args.alpha is not None:
        coupling["event_relaxation"] = args.alpha
    return parse_scenario(data)


def _parse_grid(text: str) -> List[float]:
    try:
        grid = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise FieldValidationError("grid", "values must be numbers", text)
    if not grid:
        raise FieldValidationError("grid", "must not be empty", text)
    return grid


def _output_dir(args: argparse.Namespace, settings: RunSettings, scenario: Scenario) -> Path:
    if args.out:
        return Path(args.out)
    return settings.output_dir / scenario.name


def _command_run(args, settings: RunSettings, scenario: Scenario) -> int:
    out = _output_dir(args, settings, scenario)
    event_logger = RunEventLogger(out)
    report = run(scenario, output_dir=out, event_logger=event_logger)
    print_run_summary(report.summary)
    print(f"\n📁 Results: {out}")
    return EXIT_OK


def _command_sweep(args, settings: RunSettings, scenario: Scenario) -> int:
    out = _output_dir(args, settings, scenario)
    workers = args.workers or settings.harness.sweep_workers
    table = sweep(scenario, SweepParameter(args.param), _parse_grid(args.grid),
                  workers=workers, output_dir=out)
    print_sweep_summary(table)
    print(f"\n📁 Results: {out}")
    return EXIT_OK


def _command_analyze(args, settings: RunSettings, scenario: Scenario) -> int:
    result = diagnostics(scenario)
    print_diagnostics(result)
    if args.json:
        path = Path(args.json)
        path.parent.mkdir(parents=True, exist_ok=True)
        write_json(result, path)
        print(f"\n📁 Diagnostics: {path}")
    return EXIT_OK


COMMANDS = {
    "run": _command_run,
    "sweep": _command_sweep,
    "analyze": _command_analyze,
}


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)

    settings = RunSettings.from_env()
    settings.configure_logging(args.verbose)
    if args.seed is not None:
        logger.debug(f"--seed {args.seed} ignored: runs are deterministic")

    try:
        scenario = apply_overrides(load_scenario(args.scenario), args)
        return COMMANDS[args.command](args, settings, scenario)
    except (FieldValidationError, ConfigurationError) as e:
        print(f"\n❌ Invalid scenario: {e}")
        return EXIT_INVALID
    except NonConvergenceError as e:
        print(f"\n❌ Coupling did not converge: {e}")
        return EXIT_NON_CONVERGENCE
    except KeyboardInterrupt:
        print("\n⚠️ Interrupted by user")
        return 130


if __name__ == "__main__":
    sys.exit(main())
