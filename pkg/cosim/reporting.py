"""
Run Reporting
=============

Writes run artifacts (CSV tables, JSON summary, scenario copy) and prints
human-facing summaries.
"""

import json
import logging
import math
from pathlib import Path
from typing import Any, Dict, Union

import pandas as pd

from .scenario import Scenario, save_scenario

logger = logging.getLogger("cosim.reporting")

# round-trips every double
FLOAT_FORMAT = "%.17g"


def write_csv(frame: pd.DataFrame, path: Path) -> Path:
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    return path


def _json_safe(value: Any) -> Any:
    if isinstance(value, float) and not math.isfinite(value):
        return str(value)
    if isinstance(value, dict):
        return {str(k): _json_safe(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_json_safe(v) for v in value]
    return value


def write_json(data: Dict[str, Any], path: Path) -> Path:
    with open(path, 'w') as f:
        json.dump(_json_safe(data), f, indent=2, default=str)
    return path


class RunReporter:
    """Writes the artifacts of one run into an output directory"""

    def __init__(self, output_dir: Union[str, Path] = "results"):
        self.output_dir = Path(output_dir)
        self.output_dir.mkdir(parents=True, exist_ok=True)

    def write(self, report, scenario: Scenario) -> Dict[str, Path]:
        outputs = scenario.outputs
        written: Dict[str, Path] = {}
        if outputs.series:
            written["series"] = write_csv(report.series, self.output_dir / "series.csv")
        if outputs.trace:
            written["trace"] = write_csv(report.trace_frame, self.output_dir / "trace.csv")
        if outputs.ledger:
            written["ledger"] = write_csv(report.ledger_frame, self.output_dir / "ledger.csv")
        if outputs.events:
            written["events"] = write_csv(report.events, self.output_dir / "events.csv")
        written["summary"] = write_json(report.summary, self.output_dir / "summary.json")
        written["scenario"] = save_scenario(scenario, self.output_dir / "scenario.yaml")

        for name, path in written.items():
            logger.info(f"📊 {name} written: {path}")
        return written


class SweepReporter:
    """Writes a collated sweep table"""

    def __init__(self, output_dir: Union[str, Path] = "results"):
        self.output_dir = Path(output_dir)
        self.output_dir.mkdir(parents=True, exist_ok=True)

    def write(self, table: pd.DataFrame) -> Path:
        path = write_csv(table, self.output_dir / "sweep.csv")
        logger.info(f"📊 sweep written: {path}")
        return path


def _row(label: str, value: Any) -> str:
    if isinstance(value, float):
        value = f"{value:.6g}"
    return f"{label:<24} {value}"


def print_run_summary(summary: Dict[str, Any]) -> None:
    print(f"\n📊 Run Summary: {summary['scenario']}")
    print("=" * 40)
    print(_row("Scheme:", summary["scheme"]))
    print(_row("Macro step [s]:", summary["dt"]))
    print(_row("Steps:", summary["steps"]))
    print(_row("Final time [s]:", summary["t_final"]))
    print(_row("Stopped by:", summary["stopped_by"]))
    print(_row("Total iterations:", summary["total_iterations"]))
    print(_row("m1 / T1 final:", f"{summary['m1_final']:.6g} kg / {summary['T1_final']:.6g} K"))
    print(_row("m2 / T2 final:", f"{summary['m2_final']:.6g} kg / {summary['T2_final']:.6g} K"))
    print(_row("State of domain 2:", summary["state2_final"]))
    energy = summary["energy"]
    print(_row("Peak |eps_global|:", energy["peak_eps_global"]))
    print(_row("Peak |eps_local|:", energy["peak_eps_local"]))
    if summary["events"]:
        print("\n🔀 Committed events")
        for event in summary["events"]:
            print(f"  {event['transition']:<20} t* = {event['t_star']:.6g} s")
    if "stationary" in summary:
        stationary = summary["stationary"]
        print(f"\n✅ Stationary: m1 = {stationary['m1']:.6g} kg, T1 = {stationary['T1']:.6g} K")


def print_diagnostics(diagnostics: Dict[str, Any]) -> None:
    print("\n📊 Closed-form Diagnostics")
    print("=" * 40)
    for key, value in diagnostics.items():
        if isinstance(value, list):
            value = ", ".join(f"{v:.6g}" for v in value)
        print(_row(f"{key}:", value))


def print_sweep_summary(table: pd.DataFrame) -> None:
    ok = int((table["status"] == "ok").sum())
    print(f"\n📊 Sweep Summary: {table['parameter'].iloc[0]} over {len(table)} points")
    print("=" * 40)
    print(f"✅ Completed: {ok}")
    print(f"❌ Failed: {len(table) - ok}")
    for _, row in table.iterrows():
        emoji = "✅" if row["status"] == "ok" else "❌"
        print(f"  {emoji} {row['value']:<10g} {row['status']}")
