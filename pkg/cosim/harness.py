"""
Scenario Harness
================

Assembles solvers and a coupling driver from a scenario, runs it to its end
time or to stationarity, and collects the per-step series, the iteration
trace, the energy ledger and the committed events.
"""

import asyncio
import logging
import math
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Hashable, List, Optional, Sequence, Union

import pandas as pd

from .analysis import (EnergyLedger, StabilityInputs, efficiency_window, ecs_characteristic_roots,
                       energy_update, envelope_growth, hbar_crit, omega_bounds, r12,
                       reference_energy, spectral_radius, toy_ecs_hbar_limit, toy_ecs_roots,
                       toy_ics_contraction, toy_ics_omega_bounds)
from .config import RunSettings, Scheme, SweepParameter
from .coupling import CoupledSystem, CouplingConfig, IterationTrace, make_relaxation
from .errors import ConfigurationError, CosimError, NonConvergenceError
from .model import BoundarySpec, GeometrySpec, MaterialProps, SubdomainState
from .run_log import RunEventLogger
from .scenario import Scenario, SolverSection, parse_scenario
from .solvers import (CoupledSolver, LumpedSolver, Reference1DSolver, SolverConfig,
                      ThresholdParams, stable_micro_step)

logger = logging.getLogger("cosim.harness")

SERIES_COLUMNS = ["t", "T1", "T2", "T21", "phi12", "m2", "state2", "iters"]
EVENT_COLUMNS = ["transition", "t_star"]


@dataclass
class RunReport:
    """Everything one run produced"""
    scenario: str
    scheme: str
    series: pd.DataFrame
    trace: IterationTrace
    ledger: EnergyLedger
    events: pd.DataFrame
    summary: Dict[str, Any] = field(default_factory=dict)

    @property
    def trace_frame(self) -> pd.DataFrame:
        return self.trace.to_frame()

    @property
    def ledger_frame(self) -> pd.DataFrame:
        return self.ledger.to_frame()


class StationarityMonitor:
    """|T^{n+1} - T^n| / (t^{n+1} - t^n) below threshold for window consecutive steps

    Steps starting before armed_at are not counted; a run arms it on its
    last scheduled boundary change.
    """

    def __init__(self, threshold: float, window: int, armed_at: float = -math.inf):
        self.threshold = threshold
        self.window = window
        self.armed_at = armed_at
        self.count = 0

    def update(self, previous: float, current: float, elapsed: float,
               step_start: Optional[float] = None) -> bool:
        if step_start is not None and step_start < self.armed_at:
            self.count = 0
            return False
        rate = abs(current - previous) / elapsed if elapsed > 0.0 else math.inf
        self.count = self.count + 1 if rate < self.threshold else 0
        return self.count >= self.window


def _slab_length(section: SolverSection) -> float:
    area = section.geometry.cross_section_area
    from_mass = section.initial.mass / (section.material.density * area)
    given = section.geometry.characteristic_length
    if not section.geometry.cylindrical:
        if given is None:
            raise ConfigurationError(
                f"solver {section.id}: a non-cylindrical slab needs geometry.characteristic_length")
        return given
    if given is not None and not math.isclose(given, from_mass, rel_tol=1e-9):
        raise ConfigurationError(
            f"solver {section.id}: geometry.characteristic_length {given} m disagrees with "
            f"mass/(density*area) = {from_mass} m")
    return from_mass


def build_solver(section: SolverSection, macro_step: float) -> CoupledSolver:
    material = MaterialProps(**section.material.model_dump())
    geometry = GeometrySpec(characteristic_length=_slab_length(section),
                            cross_section_area=section.geometry.cross_section_area,
                            cylindrical=section.geometry.cylindrical)
    boundary = BoundarySpec(schedule=tuple(tuple(pair) for pair in section.boundary.schedule),
                            sign=section.boundary.sign)
    face = section.initial.face_temperature or section.initial.temperature

    if section.kind == "reference_1d":
        provisional = SolverConfig(micro_step=macro_step, integration=section.integration,
                                   material=material, geometry=geometry, boundary=boundary)
        micro_step = section.micro_step or stable_micro_step(provisional, section.nodes)
        config = SolverConfig(micro_step=micro_step, integration=section.integration,
                              material=material, geometry=geometry, boundary=boundary)
        return Reference1DSolver(section.id, section.neighbor, config, section.role,
                                 section.initial.temperature, face, nodes=section.nodes)

    config = SolverConfig(micro_step=section.micro_step or macro_step,
                          integration=section.integration, material=material, geometry=geometry,
                          boundary=boundary, boundary_exchange=section.boundary_exchange)
    thresholds = ThresholdParams(**section.thresholds.model_dump()) if section.thresholds else None
    return LumpedSolver(section.id, section.neighbor, config, section.role,
                        SubdomainState(mass=section.initial.mass,
                                       avg_temperature=section.initial.temperature),
                        face, thresholds=thresholds, phase=section.phase)


def build_coupling(scenario: Scenario) -> CouplingConfig:
    section = scenario.coupling
    relaxation = make_relaxation(section.relaxation.kind, section.relaxation.omega,
                                 section.relaxation.omega_max)
    return CouplingConfig(scheme=section.scheme, macro_step=section.macro_step,
                          tolerance=section.tolerance, max_iterations=section.max_iterations,
                          relaxation=relaxation, event_relaxation=section.event_relaxation,
                          solver_order=tuple(scenario.order),
                          max_sync_iterations=section.max_sync_iterations,
                          synchronize_events=section.synchronize_events)


def build_system(scenario: Scenario) -> CoupledSystem:
    solvers = {s.id: build_solver(s, scenario.coupling.macro_step) for s in scenario.solvers}
    return CoupledSystem(solvers, build_coupling(scenario))


def stability_inputs(scenario: Scenario, dt: Optional[float] = None) -> StabilityInputs:
    first, second = (scenario.solver(sid) for sid in scenario.domains)
    configs = [build_solver(s, scenario.coupling.macro_step).config for s in (first, second)]
    return StabilityInputs.from_configs(configs[0], configs[1], dt or scenario.coupling.macro_step,
                                        first.initial.mass, second.initial.mass)


def diagnostics(scenario: Scenario, dt: Optional[float] = None) -> Dict[str, Any]:
    """Closed-form stability and relaxation diagnostics of the scenario's first two domains"""
    inputs = stability_inputs(scenario, dt)
    omega_max, omega_opt = omega_bounds(inputs)
    toy_omega_max, toy_omega_opt = toy_ics_omega_bounds(inputs)
    roots = ecs_characteristic_roots(inputs)
    toy_roots = toy_ecs_roots(inputs)
    return {
        "dt": inputs.dt,
        "tau1": inputs.tau1,
        "tau2": inputs.tau2,
        "hbar": inputs.hbar,
        "r12": r12(inputs),
        "hbar_crit": hbar_crit(inputs.dt, inputs.tau1, inputs.tau2),
        "omega_max": omega_max,
        "omega_opt": omega_opt,
        "ecs_root_moduli": [abs(roots[0]), abs(roots[1])],
        "toy_ecs_spectral_radius": spectral_radius(toy_roots),
        "toy_ecs_hbar_limit": toy_ecs_hbar_limit(inputs.dt, inputs.tau1, inputs.tau2),
        "toy_ics_omega_max": toy_omega_max,
        "toy_ics_omega_opt": toy_omega_opt,
        "in_efficiency_window": efficiency_window(inputs.dt, min(inputs.tau1, inputs.tau2)),
    }


def _last_boundary_change(scenario: Scenario) -> float:
    return max(t for section in scenario.solvers for t, _ in section.boundary.schedule)


def _reference_energy(scenario: Scenario) -> float:
    second = scenario.solver(scenario.domains[1])
    material = second.material
    return reference_energy(second.initial.mass, material.heat_capacity,
                            material.fusion_temperature, second.initial.temperature,
                            material.fusion_enthalpy)


def _series_row(system: CoupledSystem, first: Hashable, second: Hashable, iterations: int) -> Dict[str, Any]:
    b12 = system.registry.project(first, second)
    b21 = system.registry.project(second, first)
    return {
        "t": system.time,
        "T1": system.solvers[first].state.avg_temperature,
        "T2": system.solvers[second].state.avg_temperature,
        "T21": b21.temperature,
        "phi12": b12.heat_flux,
        "m2": system.solvers[second].state.mass,
        "state2": system.solvers[second].phase.value,
        "iters": iterations,
    }


def run(scenario: Scenario, output_dir: Optional[Union[str, Path]] = None,
        event_logger: Optional[RunEventLogger] = None,
        settings: Optional[RunSettings] = None) -> RunReport:
    """Run a scenario deterministically; writes the report when output_dir is given"""
    defaults = (settings or default_settings()).harness
    system = build_system(scenario)
    first, second = scenario.domains
    config = system.config
    dt_nominal = config.macro_step
    t_end = scenario.end.t_end
    stationarity = scenario.end.stationarity
    monitor = None
    if stationarity is not None:
        monitor = StationarityMonitor(stationarity.threshold or defaults.stationarity_threshold,
                                      stationarity.window or defaults.stationarity_window,
                                      armed_at=_last_boundary_change(scenario))
    watched = (stationarity.solver if stationarity and stationarity.solver else first)
    fusion_enthalpy = scenario.solver(second).material.fusion_enthalpy
    ledger = EnergyLedger(_reference_energy(scenario))

    rows: List[Dict[str, Any]] = [_series_row(system, first, second, 0)]
    event_rows: List[Dict[str, Any]] = []
    committed_events: List[Dict[str, Any]] = []
    stopped_by = "t_end"
    started = time.time()
    logger.info(f"🚀 {scenario.name}: {config.scheme.value}, dt={dt_nominal} s, t_end={t_end} s")
    if event_logger:
        event_logger.log("run_start", scenario=scenario.name, scheme=config.scheme.value, dt=dt_nominal)

    try:
        while t_end - system.time > 1.0e-9 * dt_nominal:
            t_prev = system.time
            watched_before = system.solvers[watched].state.avg_temperature
            b21_start = system.registry.project(second, first)
            summary = system.step(min(dt_nominal, t_end - system.time))

            b12 = system.registry.project(first, second)
            if config.scheme is Scheme.ICS:
                b21 = system.registry.project(second, first)
            else:
                b21 = b21_start
            energy_update(ledger, config.scheme, b12.heat_flux, b21.heat_flux, b21.mass_flow_rate,
                          fusion_enthalpy, system.time - t_prev, system.time, summary.step,
                          area12=b12.area, area21=b21.area,
                          tolerance=config.tolerance if config.scheme is Scheme.ICS else None)
            rows.append(_series_row(system, first, second, summary.iterations))

            for event in summary.events:
                event_rows.append({"transition": event.transition.label, "t_star": event.committed_time})
                record = {"solver": str(event.solver_id), "transition": event.transition.label,
                          "t_star": event.committed_time, "located_at": event.event_time,
                          "step": summary.step}
                committed_events.append(record)
                if event_logger:
                    event_logger.log("event", **record)

            if monitor and monitor.update(watched_before,
                                          system.solvers[watched].state.avg_temperature,
                                          system.time - t_prev, step_start=t_prev):
                stopped_by = "stationarity"
                break
    except NonConvergenceError as e:
        if e.trace is None:
            e.trace = system.trace
        logger.error(f"❌ {scenario.name}: {e}")
        if event_logger:
            event_logger.log("non_convergence", scenario=scenario.name, t=system.time, message=str(e))
        raise

    series = pd.DataFrame(rows, columns=SERIES_COLUMNS)
    events = pd.DataFrame(event_rows, columns=EVENT_COLUMNS)
    states = system.states()
    iterations = [s.iterations for s in system.trace.steps]
    summary_data: Dict[str, Any] = {
        "scenario": scenario.name,
        "scheme": config.scheme.value,
        "dt": dt_nominal,
        "steps": len(system.trace.steps),
        "t_final": system.time,
        "stopped_by": stopped_by,
        "m1_final": states[first].mass,
        "T1_final": states[first].avg_temperature,
        "m2_final": states[second].mass,
        "T2_final": states[second].avg_temperature,
        "state2_final": system.solvers[second].phase.value,
        "events": committed_events,
        "total_iterations": sum(iterations),
        "max_iterations_per_step": max(iterations, default=0),
        "energy": {
            "reference": ledger.reference_energy,
            "final_eps_global": ledger.entries[-1].eps_cumulative if ledger.entries else 0.0,
            "peak_eps_global": ledger.peak_relative_global(),
            "peak_eps_local": max((abs(e.eps_local) for e in ledger.entries), default=0.0),
        },
        "closed_form": diagnostics(scenario),
    }
    if stopped_by == "stationarity":
        summary_data["stationary"] = {"m1": states[first].mass, "T1": states[first].avg_temperature}

    report = RunReport(scenario=scenario.name, scheme=config.scheme.value, series=series,
                       trace=system.trace, ledger=ledger, events=events, summary=summary_data)
    logger.info(f"✅ {scenario.name}: {summary_data['steps']} steps to t={system.time:.6g} s "
                f"({stopped_by}) in {time.time() - started:.2f}s")
    if event_logger:
        event_logger.log("run_finish", scenario=scenario.name, t_final=system.time, stopped_by=stopped_by)
    if output_dir is not None:
        from .reporting import RunReporter
        RunReporter(output_dir).write(report, scenario)
    return report


def apply_parameter(scenario: Scenario, parameter: SweepParameter, value: float) -> Scenario:
    """Copy of the scenario with one sweep parameter set"""
    parameter = SweepParameter(parameter)
    data = scenario.to_dict()
    if parameter is SweepParameter.DT:
        data["coupling"]["macro_step"] = value
        for solver in data["solvers"]:
            if solver["kind"] == "lumped" and solver.get("micro_step") and solver["micro_step"] > value:
                solver["micro_step"] = value
    elif parameter is SweepParameter.OMEGA:
        data["coupling"]["relaxation"]["omega"] = value
    else:
        current = stability_inputs(scenario).hbar
        factor = value / current
        first = next(s for s in data["solvers"] if s["id"] == scenario.domains[0])
        first["material"]["thermal_conductivity"] *= factor
        first["material"]["heat_capacity"] *= factor
    data["name"] = f"{scenario.name}[{parameter.value}={value:g}]"
    return parse_scenario(data)


def _first_time(events: Sequence[Dict[str, Any]], label: str) -> Optional[float]:
    return next((e["t_star"] for e in events if e["transition"] == label), None)


def sweep_point(scenario: Scenario, parameter: SweepParameter, value: float) -> Dict[str, Any]:
    """One sweep row; failures are recorded, never raised"""
    row: Dict[str, Any] = {"parameter": SweepParameter(parameter).value, "value": value}
    try:
        point = apply_parameter(scenario, parameter, value)
        closed_form = diagnostics(point)
        row.update({
            "r12": closed_form["r12"],
            "hbar": closed_form["hbar"],
            "hbar_crit": closed_form["hbar_crit"],
            "omega_max": closed_form["omega_max"],
            "toy_ecs_spectral_radius": closed_form["toy_ecs_spectral_radius"],
            "toy_ics_contraction": toy_ics_contraction(stability_inputs(point), point.coupling.relaxation.omega),
            "in_efficiency_window": closed_form["in_efficiency_window"],
        })
        report = run(point)
        summary = report.summary
        row.update({
            "status": "ok",
            "error": "",
            "t_final": summary["t_final"],
            "m1_final": summary["m1_final"],
            "T1_final": summary["T1_final"],
            "m2_final": summary["m2_final"],
            "t_heating_melting": _first_time(summary["events"], "heating->melting"),
            "t_melting_empty": _first_time(summary["events"], "melting->empty"),
            "total_iterations": summary["total_iterations"],
            "peak_eps_global": summary["energy"]["peak_eps_global"],
            "envelope_growth": envelope_growth(report.series["phi12"].to_numpy()),
        })
    except NonConvergenceError as e:
        row.update({"status": "non_convergence", "error": str(e)})
    except CosimError as e:
        row.update({"status": "failed", "error": str(e)})
    return row


SWEEP_COLUMNS = ["parameter", "value", "status", "error", "r12", "hbar", "hbar_crit", "omega_max",
                 "toy_ecs_spectral_radius", "toy_ics_contraction", "in_efficiency_window",
                 "t_final", "m1_final", "T1_final", "m2_final", "t_heating_melting",
                 "t_melting_empty", "total_iterations", "peak_eps_global", "envelope_growth"]


async def _sweep_async(scenario: Scenario, parameter: SweepParameter, grid: Sequence[float],
                       workers: int) -> List[Dict[str, Any]]:
    semaphore = asyncio.Semaphore(max(workers, 1))

    async def point(value: float) -> Dict[str, Any]:
        async with semaphore:
            return await asyncio.to_thread(sweep_point, scenario, parameter, value)

    return await asyncio.gather(*(point(v) for v in grid))


def sweep(scenario: Scenario, parameter: SweepParameter, grid: Sequence[float],
          workers: int = 1, output_dir: Optional[Union[str, Path]] = None) -> pd.DataFrame:
    """One run per grid point, collated in grid order"""
    grid = [float(v) for v in grid]
    if not grid:
        raise ConfigurationError("sweep grid is empty")
    parameter = SweepParameter(parameter)
    if parameter is SweepParameter.OMEGA and scenario.coupling.scheme is not Scheme.ICS:
        raise ConfigurationError("an omega sweep needs an ics scenario")
    logger.info(f"🔁 sweep {parameter.value} over {len(grid)} points ({workers} worker(s))")
    if workers > 1:
        rows = asyncio.run(_sweep_async(scenario, parameter, grid, workers))
    else:
        rows = [sweep_point(scenario, parameter, value) for value in grid]
    table = pd.DataFrame(rows, columns=SWEEP_COLUMNS)
    if output_dir is not None:
        from .reporting import SweepReporter
        SweepReporter(output_dir).write(table)
    return table


def default_settings() -> RunSettings:
    return RunSettings.from_env()
