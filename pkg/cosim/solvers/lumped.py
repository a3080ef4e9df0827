"""
Lumped Solvers
==============

Lumped (0D) slab solvers for the three phases of a subdomain and the
state-machine wrapper that exposes them as one black-box solver.

A slab has two faces: the interface face shared with its neighbor and the
external face on its boundary. Face fluxes follow the stationary closure and
are outgoing. Each macro step is integrated in micro steps of the configured
size, the last one shortened to land on the step end; guards are checked at
the end of every micro step and a crossing is located by linear
interpolation of the guard function.

Inputs may be single values or waveforms. An implicit micro step reads its
input at the step end, an explicit one at the step start. Every advance
returns the waveform of its outputs sampled at the micro-step ends.
"""

import logging
import math
from dataclasses import dataclass
from typing import Callable, Dict, Hashable, List, Mapping, Optional, Tuple, Union

from ..closures import cylinder_area, face_temperature_for_flux, stefan_balance
from ..config import Integration, InterfaceRole
from ..errors import (ConfigurationError, FieldValidationError, PreconditionError,
                      SolverFailure)
from ..model import InterfaceVariables, InterfaceWaveform, SubdomainState, value_at
from .base import (HEATING_TO_MELTING, MELTING_TO_EMPTY, MELTING_TO_HEATING, Phase,
                   SolverConfig, SolverEvent, SolverOutcome, StateTransition,
                   ThresholdParams)

logger = logging.getLogger("cosim.solvers")

SNAP_TOLERANCE = 1.0e-9

Incoming = Union[InterfaceVariables, InterfaceWaveform]
MicroStep = Callable[[SubdomainState, float, float], Tuple[SubdomainState, InterfaceVariables]]


@dataclass(frozen=True)
class _GuardSpec:
    transition: StateTransition
    value: Callable[[SubdomainState, InterfaceVariables], float]
    strict: bool = False

    def active(self, g: float) -> bool:
        return g > 0.0 if self.strict else g >= 0.0


@dataclass(frozen=True)
class _Integration:
    state: SubdomainState
    waveform: InterfaceWaveform
    end_time: float
    event: Optional[SolverEvent]
    truncated: bool


def slab_dimensions(cfg: SolverConfig, mass: float) -> Tuple[float, float]:
    """(A, L) of the slab; a cylinder follows its mass"""
    if cfg.geometry.cylindrical:
        return cylinder_area(cfg.geometry, cfg.material.density, mass)
    return cfg.geometry.cross_section_area, cfg.geometry.characteristic_length


def _boundary_temperature(cfg: SolverConfig, t: float) -> float:
    return cfg.boundary.temperature_at(t)


def _reading(cfg: SolverConfig, incoming: Incoming, t: float, h: float) -> InterfaceVariables:
    if cfg.integration is Integration.IMPLICIT_EULER:
        return value_at(incoming, t + h)
    return value_at(incoming, t)


def _check_input(incoming: Incoming) -> None:
    for name in ("heat_flux", "temperature", "mass_flow_rate", "area"):
        value = getattr(incoming, name)
        if not math.isfinite(value):
            raise FieldValidationError(name, "must be finite", value)


def _integrate(step: MicroStep, state: SubdomainState, start_output: InterfaceVariables,
               t_n: float, dt: float, micro_step: float, guards: List[_GuardSpec],
               stop_at_event: bool) -> _Integration:
    if not (math.isfinite(dt) and dt > 0.0):
        raise FieldValidationError("dt", "must be > 0", dt)
    end = t_n + dt
    t = t_n
    current, output = state, start_output
    times: List[float] = []
    samples: List[InterfaceVariables] = []
    previous = [g.value(current, output) for g in guards]
    event: Optional[SolverEvent] = None

    def finish(final_state, end_time, found, truncated) -> _Integration:
        waveform = InterfaceWaveform(t_n, start_output, tuple(times), tuple(samples))
        return _Integration(final_state, waveform, end_time, found, truncated)

    while t < end:
        remaining = end - t
        last = remaining <= micro_step * (1.0 + SNAP_TOLERANCE)
        h = remaining if last else micro_step
        t_next = end if last else t + h
        new_state, new_output = step(current, t, h)

        values = [g.value(new_state, new_output) for g in guards]
        crossing = None
        if event is None:
            for spec, g_old, g_new in zip(guards, previous, values):
                if spec.active(g_new) and not spec.active(g_old):
                    theta = g_old / (g_old - g_new) if g_old != g_new else 1.0
                    if not 0.0 < theta <= 1.0:
                        theta = 1.0
                    if crossing is None or theta < crossing[0]:
                        crossing = (theta, spec.transition)

        if crossing is not None:
            theta, transition = crossing
            if stop_at_event and theta < 1.0:
                t_star = t + theta * h
                h_star = t_star - t
                if h_star > 0.0:
                    new_state, new_output = step(current, t, h_star)
                    times.append(t_star)
                    samples.append(new_output)
                    return finish(new_state, t_star, SolverEvent(t_star, transition), True)
            event_time = t_next if stop_at_event else t + theta * h
            event = SolverEvent(event_time, transition)
            if stop_at_event:
                times.append(t_next)
                samples.append(new_output)
                return finish(new_state, t_next, event, t_next < end)

        current, output, previous = new_state, new_output, values
        times.append(t_next)
        samples.append(new_output)
        t = t_next

    return finish(current, end, event, False)


def _heating_dirichlet_step(cfg: SolverConfig, incoming: Incoming) -> MicroStep:
    material = cfg.material
    e = cfg.exchange_factor

    def step(state: SubdomainState, t: float, h: float):
        reading = _reading(cfg, incoming, t, h)
        face = reading.temperature
        inflow = max(reading.mass_flow_rate, 0.0)
        area, length = slab_dimensions(cfg, state.mass)
        conductance = material.thermal_conductivity / length
        t_b = _boundary_temperature(cfg, t)
        mass_new = state.mass + inflow * h
        alpha = 6.0 * area * conductance * (1.0 + e)
        beta = (area * conductance * (4.0 * face + 2.0 * t_b)
                + e * area * conductance * (4.0 * t_b + 2.0 * face)
                + inflow * material.heat_capacity * face
                + state.mass * material.residual_power)
        if cfg.integration is Integration.IMPLICIT_EULER:
            temperature = ((state.mass * material.heat_capacity * state.avg_temperature / h + beta)
                           / (mass_new * material.heat_capacity / h + alpha))
        else:
            temperature = ((state.mass * material.heat_capacity * state.avg_temperature
                            + h * (beta - alpha * state.avg_temperature))
                           / (mass_new * material.heat_capacity))
        _, length_new = slab_dimensions(cfg, mass_new)
        flux = material.thermal_conductivity / length_new * (6.0 * temperature - 4.0 * face - 2.0 * t_b)
        return (SubdomainState(mass=mass_new, avg_temperature=temperature),
                InterfaceVariables(heat_flux=flux, temperature=face,
                                   mass_flow_rate=-inflow, area=area))

    return step


def _heating_neumann_step(cfg: SolverConfig, incoming: Incoming) -> MicroStep:
    material = cfg.material
    e = cfg.exchange_factor

    def step(state: SubdomainState, t: float, h: float):
        reading = _reading(cfg, incoming, t, h)
        area, length = slab_dimensions(cfg, state.mass)
        t_b = _boundary_temperature(cfg, t)
        flux = -reading.heat_flux * reading.area / area
        if state.mass == 0.0:
            return state, InterfaceVariables(heat_flux=flux, temperature=t_b, area=area)
        conductance = material.thermal_conductivity / length
        capacity = state.mass * material.heat_capacity
        source = state.mass * material.residual_power
        if cfg.integration is Integration.IMPLICIT_EULER:
            temperature = ((capacity * state.avg_temperature / h - area * flux * (1.0 + e / 2.0)
                            + 3.0 * e * area * conductance * t_b + source)
                           / (capacity / h + 3.0 * e * area * conductance))
        else:
            temperature = state.avg_temperature + h * (
                -area * flux * (1.0 + e / 2.0)
                - 3.0 * e * area * conductance * (state.avg_temperature - t_b)
                + source) / capacity
        face = face_temperature_for_flux(flux, temperature, t_b, material.thermal_conductivity, length)
        return (SubdomainState(mass=state.mass, avg_temperature=temperature),
                InterfaceVariables(heat_flux=flux, temperature=face, mass_flow_rate=0.0, area=area))

    return step


def _melting_step(cfg: SolverConfig, incoming: Incoming) -> MicroStep:
    material = cfg.material
    e = cfg.exchange_factor
    face = material.fusion_temperature

    def step(state: SubdomainState, t: float, h: float):
        reading = _reading(cfg, incoming, t, h)
        area, length = slab_dimensions(cfg, state.mass)
        if state.mass == 0.0:
            # fully molten: the front sits on the external face
            return state, InterfaceVariables(heat_flux=-reading.heat_flux * reading.area / area,
                                             temperature=face, area=area)
        conductance = material.thermal_conductivity / length
        t_b = _boundary_temperature(cfg, t)
        capacity = state.mass * material.heat_capacity
        alpha = 6.0 * area * conductance * (1.0 + e)
        beta = (area * conductance * (4.0 * face + 2.0 * t_b)
                + e * area * conductance * (4.0 * t_b + 2.0 * face)
                + state.mass * material.residual_power)
        if cfg.integration is Integration.IMPLICIT_EULER:
            temperature = (capacity * state.avg_temperature / h + beta) / (capacity / h + alpha)
        else:
            temperature = state.avg_temperature + h * (beta - alpha * state.avg_temperature) / capacity
        flux = conductance * (6.0 * temperature - 4.0 * face - 2.0 * t_b)
        melt_rate = stefan_balance(flux, reading.heat_flux, area, reading.area,
                                   material.fusion_enthalpy)
        mass_new = max(state.mass - melt_rate * h, 0.0)
        return (SubdomainState(mass=mass_new, avg_temperature=temperature),
                InterfaceVariables(heat_flux=flux, temperature=face,
                                   mass_flow_rate=melt_rate, area=area))

    return step


def _start_output(start_output: Optional[InterfaceVariables], state: SubdomainState,
                  cfg: SolverConfig) -> InterfaceVariables:
    if start_output is not None:
        return start_output
    area, _ = slab_dimensions(cfg, state.mass)
    return InterfaceVariables(temperature=state.avg_temperature, area=area)


def _outcome(neighbor: Hashable, result: _Integration) -> SolverOutcome:
    return SolverOutcome(outputs={neighbor: result.waveform.end}, new_state=result.state,
                         end_time=result.end_time, event=result.event, truncated=result.truncated,
                         waveforms={neighbor: result.waveform})


def advance_heating(state: SubdomainState, incoming: Incoming, t_n: float, dt: float,
                    cfg: SolverConfig, role: InterfaceRole, *, neighbor: Hashable = None,
                    thresholds: Optional[ThresholdParams] = None,
                    start_output: Optional[InterfaceVariables] = None,
                    stop_at_event: bool = True) -> SolverOutcome:
    """Integrate the heating equations; the receiver role selects what is read

    A Dirichlet receiver reads the imposed face temperature (and any incoming
    mass flow) and returns its face flux. A Neumann receiver reads the
    neighbor's outgoing flux and returns its face temperature. With
    thresholds, the face temperature guard of the melting trigger is watched.
    """
    _check_input(incoming)
    role = InterfaceRole(role)
    if role is InterfaceRole.DIRICHLET_RECEIVER:
        step = _heating_dirichlet_step(cfg, incoming)
    else:
        step = _heating_neumann_step(cfg, incoming)
    guards = []
    if thresholds is not None:
        trigger = thresholds.melt_trigger
        guards.append(_GuardSpec(HEATING_TO_MELTING, lambda s, out: out.temperature - trigger))
    result = _integrate(step, state, _start_output(start_output, state, cfg), t_n, dt,
                        cfg.micro_step, guards, stop_at_event)
    return _outcome(neighbor, result)


def advance_melting(state: SubdomainState, incoming: Incoming, t_n: float, dt: float,
                    cfg: SolverConfig, thresholds: ThresholdParams, *, neighbor: Hashable = None,
                    start_output: Optional[InterfaceVariables] = None,
                    stop_at_event: bool = True) -> SolverOutcome:
    """Integrate the melting equations with the face pinned at the fusion temperature"""
    _check_input(incoming)
    if state.mass <= thresholds.residual_mass:
        raise PreconditionError(
            f"melting requires mass > {thresholds.residual_mass} kg, got {state.mass} kg")
    residual = thresholds.residual_mass
    guards = [
        _GuardSpec(MELTING_TO_EMPTY, lambda s, out: residual - s.mass),
        _GuardSpec(MELTING_TO_HEATING, lambda s, out: -out.mass_flow_rate, strict=True),
    ]
    if start_output is None:
        area, _ = slab_dimensions(cfg, state.mass)
        start_output = InterfaceVariables(temperature=cfg.material.fusion_temperature, area=area)
    result = _integrate(_melting_step(cfg, incoming), state, start_output, t_n, dt,
                        cfg.micro_step, guards, stop_at_event)
    return _outcome(neighbor, result)


def advance_empty(state: SubdomainState, incoming: Incoming, t_n: float, dt: float,
                  cfg: SolverConfig, *, neighbor: Hashable = None,
                  start_output: Optional[InterfaceVariables] = None) -> SolverOutcome:
    """Residue slab: conducts as a Neumann receiver, never melts, never raises an event"""
    _check_input(incoming)
    result = _integrate(_heating_neumann_step(cfg, incoming), state,
                        _start_output(start_output, state, cfg), t_n, dt,
                        cfg.micro_step, [], False)
    return _outcome(neighbor, result)


class LumpedSolver:
    """Black-box lumped solver with one interface and a Heating/Melting/Empty state machine"""

    def __init__(self, solver_id: Hashable, neighbor: Hashable, config: SolverConfig,
                 role: InterfaceRole, initial_state: SubdomainState,
                 initial_face_temperature: float,
                 thresholds: Optional[ThresholdParams] = None,
                 phase: Phase = Phase.HEATING):
        self.solver_id = solver_id
        self.neighbor = neighbor
        self.config = config
        self.role = InterfaceRole(role)
        self.thresholds = thresholds
        self.logger = logging.getLogger(f"cosim.solvers.{solver_id}")

        if thresholds is not None:
            if self.role is not InterfaceRole.NEUMANN_RECEIVER:
                raise ConfigurationError(
                    f"solver {solver_id}: a phase-changing solver must be a neumann_receiver")
            if config.material.fusion_enthalpy <= 0.0:
                raise ConfigurationError(
                    f"solver {solver_id}: thresholds need a positive fusion enthalpy")
        elif Phase(phase) is not Phase.HEATING:
            raise ConfigurationError(f"solver {solver_id}: phase {phase} needs thresholds")

        self._state = initial_state
        self._phase = Phase(phase)
        self._initial_face_temperature = initial_face_temperature
        self._outputs: Dict[Hashable, InterfaceVariables] = self.initial_outputs()

    @property
    def neighbors(self):
        return frozenset({self.neighbor})

    @property
    def phase(self) -> Phase:
        return self._phase

    @property
    def state(self) -> SubdomainState:
        return self._state

    @property
    def outputs(self) -> Dict[Hashable, InterfaceVariables]:
        return dict(self._outputs)

    @property
    def length(self) -> float:
        return slab_dimensions(self.config, self._state.mass)[1]

    def exchanged_fields(self) -> Tuple[str, ...]:
        if self._phase is Phase.MELTING:
            return ("mass_flow_rate",)
        if self.role is InterfaceRole.DIRICHLET_RECEIVER:
            return ("heat_flux",)
        return ("temperature",)

    def initial_outputs(self) -> Dict[Hashable, InterfaceVariables]:
        area, length = slab_dimensions(self.config, self._state.mass)
        t_b = _boundary_temperature(self.config, 0.0)
        face = self._initial_face_temperature
        if self._phase is Phase.MELTING:
            face = self.config.material.fusion_temperature
        flux = (self.config.material.thermal_conductivity / length
                * (6.0 * self._state.avg_temperature - 4.0 * face - 2.0 * t_b))
        return {self.neighbor: InterfaceVariables(heat_flux=flux, temperature=face, area=area)}

    def advance(self, inputs: Mapping[Hashable, Incoming], t_n: float, dt: float,
                stop_at_event: bool = True) -> SolverOutcome:
        try:
            incoming = inputs[self.neighbor]
        except KeyError:
            raise SolverFailure(self.solver_id, f"missing input from {self.neighbor}") from None
        start_output = self._outputs[self.neighbor]
        try:
            if self._phase is Phase.MELTING:
                return advance_melting(self._state, incoming, t_n, dt, self.config, self.thresholds,
                                       neighbor=self.neighbor, start_output=start_output,
                                       stop_at_event=stop_at_event)
            if self._phase is Phase.EMPTY:
                return advance_empty(self._state, incoming, t_n, dt, self.config,
                                     neighbor=self.neighbor, start_output=start_output)
            return advance_heating(self._state, incoming, t_n, dt, self.config, self.role,
                                   neighbor=self.neighbor, thresholds=self.thresholds,
                                   start_output=start_output, stop_at_event=stop_at_event)
        except (FieldValidationError, PreconditionError, ZeroDivisionError) as e:
            raise SolverFailure(self.solver_id, str(e)) from e

    def commit(self, outcome: SolverOutcome, apply_transition: bool = True) -> None:
        self._state = outcome.new_state
        self._outputs = dict(outcome.outputs)
        if outcome.event is not None and apply_transition:
            transition = outcome.event.transition
            if transition.from_phase is not self._phase:
                raise PreconditionError(
                    f"solver {self.solver_id}: cannot apply {transition.label} in phase {self._phase.value}")
            self._phase = transition.to_phase
            self.logger.info(f"🔀 {transition.label} at t={outcome.event.event_time:.6g} s "
                             f"(m={self._state.mass:.6g} kg, T={self._state.avg_temperature:.6g} K)")

    def checkpoint(self):
        return self._state, self._phase, dict(self._outputs)

    def restore(self, snapshot) -> None:
        self._state, self._phase, outputs = snapshot
        self._outputs = dict(outputs)
