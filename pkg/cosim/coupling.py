"""
Coupling Drivers
================

Master algorithms advancing a set of black-box solvers over one macro step:

- ecs_step: explicit staggered scheme, Gauss-Seidel or Jacobi ordering
- ics_step: implicit scheme, relaxed fixed point on the interface variables
- sync_step: implicit scheme that also iterates the step horizon until every
  solver commits on the time of the first event

The drivers only see solvers through the CoupledSolver protocol and the
interface registry. Solver advances never mutate committed state, so every
sub-iteration restarts from t^n.

The implicit drivers exchange whole waveforms: a solver that samples its
outputs at every micro step hands the samples to its consumers, and the
fixed point runs on every sample of the lagged slots. The registry keeps
the end value of each slot. The explicit driver exchanges end values only.
"""

import dataclasses
import logging
import math
from abc import ABC, abstractmethod
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, Hashable, List, Mapping, Optional, Sequence, Set, Tuple, Union

import numpy as np
import pandas as pd

from .config import RelaxationKind, Scheme
from .errors import (ConfigurationError, CosimError, FieldValidationError,
                     NonConvergenceError, SolverFailure, SynchronizationError)
from .model import (InterfaceRegistry, InterfaceVariables, InterfaceWaveform, Pair, SubdomainState,
                    end_value)
from .solvers.base import CoupledSolver, SolverEvent, SolverOutcome, StateTransition

logger = logging.getLogger("cosim.coupling")

ZERO_NORM = 1.0e-12
OMEGA_FLOOR = 1.0e-12

Exchanged = Union[InterfaceVariables, InterfaceWaveform]

TRACE_COLUMNS = ["step", "k", "t_candidate", "residual_norm", "omega", "event_time"]


def secant_omega(omega_prev: float, residual: np.ndarray, previous_residual: np.ndarray) -> float:
    """Dynamic relaxation -omega_prev <dr, r_prev> / <dr, dr>

    Stagnation, or residuals sampled on different grids, keep omega_prev.
    """
    residual = np.atleast_1d(np.asarray(residual, dtype=float))
    previous_residual = np.atleast_1d(np.asarray(previous_residual, dtype=float))
    if residual.shape != previous_residual.shape:
        return omega_prev
    delta = residual - previous_residual
    denominator = float(np.dot(delta, delta))
    if denominator == 0.0:
        return omega_prev
    return -omega_prev * float(np.dot(delta, previous_residual)) / denominator


class RelaxationStrategy(ABC):
    """Chooses omega^k for b^{k+1} = omega M(b^k) + (1 - omega) b^k"""
    kind: RelaxationKind

    def reset(self) -> None:
        """Called at the start of every fixed-point solve"""

    @abstractmethod
    def next_omega(self, k: int, residual: np.ndarray,
                   previous_residual: Optional[np.ndarray]) -> float:
        ...


class ConstantRelaxation(RelaxationStrategy):
    kind = RelaxationKind.CONSTANT

    def __init__(self, omega: float = 1.0):
        if not (math.isfinite(omega) and omega > 0.0):
            raise FieldValidationError("omega", "must be > 0", omega)
        self.omega = omega

    def next_omega(self, k, residual, previous_residual) -> float:
        return self.omega

    def __repr__(self) -> str:
        return f"ConstantRelaxation(omega={self.omega})"


class SecantRelaxation(RelaxationStrategy):
    kind = RelaxationKind.SECANT

    def __init__(self, initial_omega: float = 0.5):
        if not (math.isfinite(initial_omega) and 0.0 < initial_omega <= 1.0):
            raise FieldValidationError("initial_omega", "must lie in (0, 1]", initial_omega)
        self.initial_omega = initial_omega
        self.omega = initial_omega

    def reset(self) -> None:
        self.omega = self.initial_omega

    def next_omega(self, k, residual, previous_residual) -> float:
        if k == 0 or previous_residual is None:
            self.omega = self.initial_omega
        else:
            self.omega = self._bound(secant_omega(self.omega, residual, previous_residual))
        return self.omega

    def _bound(self, omega: float) -> float:
        return omega

    def __repr__(self) -> str:
        return f"{type(self).__name__}(initial_omega={self.initial_omega})"


class AitkenRelaxation(SecantRelaxation):
    """Secant update applied recursively, clamped to (0, omega_max]"""
    kind = RelaxationKind.AITKEN

    def __init__(self, initial_omega: float = 0.5, omega_max: float = 1.0):
        super().__init__(initial_omega)
        if not (math.isfinite(omega_max) and omega_max > 0.0):
            raise FieldValidationError("omega_max", "must be > 0", omega_max)
        self.omega_max = omega_max

    def _bound(self, omega: float) -> float:
        return max(min(omega, self.omega_max), OMEGA_FLOOR)


def make_relaxation(kind: RelaxationKind, omega: float = 1.0,
                    omega_max: float = 1.0) -> RelaxationStrategy:
    kind = RelaxationKind(kind)
    if kind is RelaxationKind.CONSTANT:
        return ConstantRelaxation(omega)
    if kind is RelaxationKind.SECANT:
        return SecantRelaxation(omega)
    return AitkenRelaxation(omega, omega_max)


@dataclass
class CouplingConfig:
    scheme: Scheme
    macro_step: float
    tolerance: float = 1.0e-4
    max_iterations: int = 50
    relaxation: RelaxationStrategy = field(default_factory=ConstantRelaxation)
    event_relaxation: float = 0.5
    solver_order: Tuple[Hashable, ...] = ()
    max_sync_iterations: int = 100
    synchronize_events: bool = True

    def __post_init__(self):
        self.scheme = Scheme(self.scheme)
        self.solver_order = tuple(self.solver_order)
        if not (math.isfinite(self.macro_step) and self.macro_step > 0.0):
            raise FieldValidationError("macro_step", "must be > 0", self.macro_step)
        if not self.tolerance > 0.0:
            raise FieldValidationError("tolerance", "must be > 0", self.tolerance)
        if not 0.0 < self.event_relaxation < 1.0:
            raise FieldValidationError("event_relaxation", "must lie in (0, 1)", self.event_relaxation)
        if self.max_iterations < 1:
            raise FieldValidationError("max_iterations", "must be >= 1", self.max_iterations)
        if self.max_sync_iterations < 1:
            raise FieldValidationError("max_sync_iterations", "must be >= 1", self.max_sync_iterations)


@dataclass(frozen=True)
class IterationRecord:
    step: int
    k: int
    t_candidate: float
    residual_norm: float
    omega: Optional[float]
    event_time: Optional[float] = None
    candidate: Tuple[float, ...] = ()
    residual: Tuple[float, ...] = ()


@dataclass(frozen=True)
class CommittedEvent:
    solver_id: Hashable
    transition: StateTransition
    event_time: float
    committed_time: float


@dataclass
class StepSummary:
    """Per-step totals of the trace"""
    step: int
    t_start: float
    t_end: float
    iterations: int
    horizon_iterations: int = 1
    events: List[CommittedEvent] = field(default_factory=list)
    consumed: Dict[Pair, InterfaceVariables] = field(default_factory=dict)
    first_event_time: Optional[float] = None


class IterationTrace:
    """Iteration records and per-step summaries, built by the master thread only"""

    def __init__(self):
        self.records: List[IterationRecord] = []
        self.steps: List[StepSummary] = []

    def add(self, record: IterationRecord) -> None:
        self.records.append(record)

    def close_step(self, summary: StepSummary) -> None:
        self.steps.append(summary)

    def tag_event_time(self, first_index: int, event_time: Optional[float]) -> None:
        for index in range(first_index, len(self.records)):
            record = self.records[index]
            self.records[index] = IterationRecord(
                record.step, record.k, record.t_candidate, record.residual_norm,
                record.omega, event_time, record.candidate, record.residual)

    @property
    def last_step(self) -> Optional[StepSummary]:
        return self.steps[-1] if self.steps else None

    def for_step(self, step: int) -> List[IterationRecord]:
        return [r for r in self.records if r.step == step]

    def residual_ratios(self, step: int) -> List[float]:
        return [r.residual_norm for r in self.for_step(step)]

    def to_frame(self) -> pd.DataFrame:
        rows = [{"step": r.step, "k": r.k, "t_candidate": r.t_candidate,
                 "residual_norm": r.residual_norm, "omega": r.omega,
                 "event_time": r.event_time} for r in self.records]
        return pd.DataFrame(rows, columns=TRACE_COLUMNS)

    def __len__(self) -> int:
        return len(self.records)


def resolve_order(solvers: Mapping[Hashable, CoupledSolver],
                  order: Optional[Sequence[Hashable]]) -> Tuple[Hashable, ...]:
    order = tuple(order) if order else tuple(solvers)
    if sorted(map(str, order)) != sorted(map(str, solvers)) or len(set(order)) != len(order):
        raise ConfigurationError(
            f"solver order {list(order)} must cover solvers {list(solvers)} exactly once")
    return order


def lagged_slots(solvers: Mapping[Hashable, CoupledSolver], order: Sequence[Hashable]) -> List[Pair]:
    """Directed slots consumed before they are produced within one ordered pass"""
    position = {sid: n for n, sid in enumerate(order)}
    slots = []
    for i in order:
        for j in sorted(solvers[i].neighbors, key=position.__getitem__):
            if position[j] >= position[i]:
                slots.append((j, i))
    return slots


def _advance(solver: CoupledSolver, inputs: Mapping[Hashable, Exchanged],
             t_n: float, dt: float, stop_at_event: bool) -> SolverOutcome:
    try:
        return solver.advance(inputs, t_n, dt, stop_at_event=stop_at_event)
    except SolverFailure:
        raise
    except CosimError as e:
        raise SolverFailure(solver.solver_id, str(e)) from e
    except Exception as e:
        raise SolverFailure(solver.solver_id, f"{type(e).__name__}: {e}") from e


def _inputs_for(solver_id: Hashable, solver: CoupledSolver, fresh: Mapping[Pair, Exchanged],
                registry: InterfaceRegistry) -> Dict[Hashable, Exchanged]:
    inputs = {}
    for j in sorted(solver.neighbors, key=str):
        value = fresh.get((j, solver_id))
        inputs[j] = value if value is not None else registry.project(j, solver_id)
    return inputs


def _relative(r_norm: float, b_norm: float) -> float:
    return r_norm if b_norm < ZERO_NORM else r_norm / b_norm


def _aligned(candidate: Exchanged, image: Exchanged) -> Exchanged:
    """The candidate on the sample times of the image"""
    if not isinstance(image, InterfaceWaveform):
        return end_value(candidate)
    if not isinstance(candidate, InterfaceWaveform):
        return InterfaceWaveform.constant(candidate, image.t_start, image.times)
    if candidate.times != image.times:
        return candidate.resample(image.times)
    return candidate


def _slot_residual(solvers: Mapping[Hashable, CoupledSolver], slot: Pair, candidate: Exchanged,
                   image: Exchanged
                   ) -> Tuple[np.ndarray, np.ndarray, float, Tuple[str, ...]]:
    """Candidate vector, residual vector and relative residual of one slot

    The ratio is the larger of the worst sample against the largest sample
    and the end sample against itself; the end sample is what the registry
    keeps.
    """
    fields = solvers[slot[0]].exchanged_fields()
    b = _aligned(candidate, image).as_vector(fields)
    r = image.as_vector(fields) - b
    if r.size == 0:
        return b, r, 0.0, fields
    r_norms = np.linalg.norm(r.reshape(-1, len(fields)), axis=1)
    b_norms = np.linalg.norm(b.reshape(-1, len(fields)), axis=1)
    ratio = max(_relative(float(r_norms.max()), float(b_norms.max())),
                _relative(float(r_norms[-1]), float(b_norms[-1])))
    return b, r, ratio, fields


def _commit(solvers: Mapping[Hashable, CoupledSolver], order: Sequence[Hashable],
            registry: InterfaceRegistry, outcomes: Mapping[Hashable, SolverOutcome],
            values: Mapping[Pair, Exchanged], transitioning: Set[Hashable]) -> None:
    for sid in order:
        solvers[sid].commit(outcomes[sid], apply_transition=sid in transitioning)
    for (i, j), value in values.items():
        registry.set_interface(i, j, end_value(value))


def _recorded_events(order: Sequence[Hashable], outcomes: Mapping[Hashable, SolverOutcome],
                     committed_time: float, within: Optional[float] = None) -> List[CommittedEvent]:
    events = []
    for sid in order:
        event = outcomes[sid].event
        if event is None:
            continue
        if within is not None and abs(event.event_time - committed_time) > within:
            continue
        events.append(CommittedEvent(sid, event.transition, event.event_time, committed_time))
    return events


def _log_events(events: Sequence[CommittedEvent]) -> None:
    for event in events:
        logger.info(f"⚡ solver {event.solver_id}: {event.transition.label} "
                    f"(t*={event.event_time:.6g} s, committed at {event.committed_time:.6g} s)")


def ecs_step(solvers: Mapping[Hashable, CoupledSolver], registry: InterfaceRegistry, t_n: float,
             dt: float, order: Optional[Sequence[Hashable]] = None, jacobi: bool = False,
             trace: Optional[IterationTrace] = None, step: int = 0
             ) -> Tuple[InterfaceRegistry, Dict[Hashable, SubdomainState], IterationTrace]:
    """One explicit staggered step: exactly one advance per solver

    Gauss-Seidel consumes the freshest interface values; Jacobi consumes the
    values of t^n only and fans the advances out to a thread pool. Guard
    crossings are recorded, integration continues in the old phase and the
    transition is committed at t^{n+1}.
    """
    order = resolve_order(solvers, order)
    trace = trace if trace is not None else IterationTrace()
    slots = lagged_slots(solvers, order)
    start_values = {slot: registry.project(*slot) for slot in slots}
    consumed: Dict[Pair, InterfaceVariables] = {}
    outcomes: Dict[Hashable, SolverOutcome] = {}
    fresh: Dict[Pair, InterfaceVariables] = {}

    if jacobi:
        inputs = {sid: _inputs_for(sid, solvers[sid], {}, registry) for sid in order}
        with ThreadPoolExecutor(max_workers=len(order)) as pool:
            futures = {sid: pool.submit(_advance, solvers[sid], inputs[sid], t_n, dt, False)
                       for sid in order}
            outcomes = {sid: futures[sid].result() for sid in order}
        for sid in order:
            consumed.update({(j, sid): value for j, value in inputs[sid].items()})
            fresh.update({(sid, j): value for j, value in outcomes[sid].outputs.items()})
    else:
        for sid in order:
            inputs = _inputs_for(sid, solvers[sid], fresh, registry)
            consumed.update({(j, sid): value for j, value in inputs.items()})
            outcomes[sid] = _advance(solvers[sid], inputs, t_n, dt, False)
            fresh.update({(sid, j): value for j, value in outcomes[sid].outputs.items()})

    t_next = t_n + dt
    ratios, candidate_values, residual_values = [], [], []
    for slot in slots:
        b, r, ratio, _ = _slot_residual(solvers, slot, start_values[slot], fresh[slot])
        ratios.append(ratio)
        candidate_values.extend(b.tolist())
        residual_values.extend(r.tolist())
    trace.add(IterationRecord(step, 0, t_next, max(ratios, default=0.0), None, None,
                              tuple(candidate_values), tuple(residual_values)))

    events = _recorded_events(order, outcomes, t_next)
    _commit(solvers, order, registry, outcomes, fresh, {e.solver_id for e in events})
    _log_events(events)
    trace.close_step(StepSummary(step=step, t_start=t_n, t_end=t_next, iterations=1,
                                 events=events, consumed=consumed,
                                 first_event_time=min((e.event_time for e in events), default=None)))
    return registry, {sid: solvers[sid].state for sid in order}, trace


def _run_pass(solvers: Mapping[Hashable, CoupledSolver], order: Sequence[Hashable],
              registry: InterfaceRegistry, candidate: Mapping[Pair, Exchanged],
              t_n: float, dt: float, stop_at_event: bool):
    current: Dict[Pair, Exchanged] = dict(candidate)
    consumed: Dict[Pair, InterfaceVariables] = {}
    outcomes: Dict[Hashable, SolverOutcome] = {}
    for sid in order:
        inputs = _inputs_for(sid, solvers[sid], current, registry)
        consumed.update({(j, sid): end_value(value) for j, value in inputs.items()})
        outcomes[sid] = _advance(solvers[sid], inputs, t_n, dt, stop_at_event)
        for j in outcomes[sid].outputs:
            current[(sid, j)] = outcomes[sid].exchanged(j)
    return outcomes, current, consumed


def _fixed_point(solvers: Mapping[Hashable, CoupledSolver], order: Sequence[Hashable],
                 registry: InterfaceRegistry, t_n: float, dt: float, cfg: CouplingConfig,
                 trace: IterationTrace, step: int, k_offset: int, t_candidate: float,
                 stop_at_event: bool, warm_start: Optional[Mapping[Pair, Exchanged]] = None):
    slots = lagged_slots(solvers, order)
    candidate = {slot: (warm_start or {}).get(slot) or registry.project(*slot) for slot in slots}
    cfg.relaxation.reset()
    previous_residual: Optional[np.ndarray] = None

    for k in range(cfg.max_iterations):
        try:
            outcomes, current, consumed = _run_pass(solvers, order, registry, candidate,
                                                    t_n, dt, stop_at_event)
        except SolverFailure as e:
            if k == 0:
                raise
            raise NonConvergenceError(
                f"step {step}: iterate {k} left the admissible state space ({e})", trace) from e

        ratios, candidate_values, residual_parts, parts = [], [], [], {}
        for slot in slots:
            b, r, ratio, fields = _slot_residual(solvers, slot, candidate[slot], current[slot])
            ratios.append(ratio)
            candidate_values.extend(b.tolist())
            residual_parts.append(r)
            parts[slot] = (b, fields)
        residual = np.concatenate(residual_parts) if residual_parts else np.zeros(0)
        converged = all(ratio <= cfg.tolerance for ratio in ratios)
        omega = None if converged else cfg.relaxation.next_omega(k, residual, previous_residual)
        trace.add(IterationRecord(step, k_offset + k, t_candidate, max(ratios, default=0.0),
                                  omega, None, tuple(candidate_values), tuple(residual.tolist())))
        logger.debug(f"step {step} k={k_offset + k}: residual {max(ratios, default=0.0):.3e}"
                     + ("" if omega is None else f", omega {omega:.4g}"))
        if converged:
            return outcomes, current, consumed, k + 1

        try:
            for slot in slots:
                b, fields = parts[slot]
                image = current[slot]
                blended = omega * image.as_vector(fields) + (1.0 - omega) * b
                candidate[slot] = image.with_vector(fields, blended)
        except FieldValidationError as e:
            raise NonConvergenceError(f"step {step}: relaxed iterate is not finite ({e})", trace) from e
        previous_residual = residual

    logger.warning(f"step {step}: no interface convergence after {cfg.max_iterations} iterations")
    raise NonConvergenceError(
        f"step {step}: interface iteration did not converge in {cfg.max_iterations} iterations",
        trace)


def ics_step(solvers: Mapping[Hashable, CoupledSolver], registry: InterfaceRegistry, t_n: float,
             dt: float, cfg: CouplingConfig, trace: Optional[IterationTrace] = None, step: int = 0
             ) -> Tuple[InterfaceRegistry, Dict[Hashable, SubdomainState], IterationTrace]:
    """One implicit step over the full macro step; guard crossings commit at t^{n+1}"""
    order = resolve_order(solvers, cfg.solver_order)
    trace = trace if trace is not None else IterationTrace()
    t_next = t_n + dt
    outcomes, current, consumed, iterations = _fixed_point(
        solvers, order, registry, t_n, dt, cfg, trace, step, 0, t_next, stop_at_event=False)
    events = _recorded_events(order, outcomes, t_next)
    _commit(solvers, order, registry, outcomes, current, {e.solver_id for e in events})
    _log_events(events)
    trace.close_step(StepSummary(step=step, t_start=t_n, t_end=t_next, iterations=iterations,
                                 events=events, consumed=consumed,
                                 first_event_time=min((e.event_time for e in events), default=None)))
    return registry, {sid: solvers[sid].state for sid in order}, trace


def sync_step(solvers: Mapping[Hashable, CoupledSolver], registry: InterfaceRegistry, t_n: float,
              dt: float, cfg: CouplingConfig, trace: Optional[IterationTrace] = None, step: int = 0
              ) -> Tuple[InterfaceRegistry, Dict[Hashable, SubdomainState], float, IterationTrace]:
    """Implicit step whose horizon is iterated onto the time of the first event

    The horizon starts at t^n + dt. Each outer iteration converges the
    interface over [t^n, horizon]; the earliest reported event time (t^n + dt
    when nothing fires) is blended into the horizon with event_relaxation,
    kept inside the bracket of horizons known to be event-free and
    event-bearing. Once the horizon settles, solvers that did not stop on
    the committed time are converged again over [t^n, t^{n+1}] so that
    every committed state belongs to t^{n+1}.
    """
    order = resolve_order(solvers, cfg.solver_order)
    trace = trace if trace is not None else IterationTrace()
    nominal_end = t_n + dt
    horizon = nominal_end
    lower, upper = t_n, None
    forced = False
    k_total = 0
    warm: Optional[Dict[Pair, Exchanged]] = None
    slots = lagged_slots(solvers, order)

    for outer in range(cfg.max_sync_iterations):
        first_record = len(trace.records)
        outcomes, current, consumed, iterations = _fixed_point(
            solvers, order, registry, t_n, horizon - t_n, cfg, trace, step, k_total, horizon,
            stop_at_event=True, warm_start=warm)
        k_total += iterations
        event_times = [outcomes[sid].event.event_time if outcomes[sid].event is not None
                       else nominal_end for sid in order]
        earliest = min(event_times)
        has_event = any(outcomes[sid].event is not None for sid in order)
        trace.tag_event_time(first_record, earliest if has_event else None)

        if forced or abs(earliest - horizon) / dt < cfg.tolerance:
            t_next = earliest if has_event else horizon
            if not (t_n < t_next <= nominal_end + ZERO_NORM * dt):
                raise SynchronizationError(
                    f"step {step}: committed time {t_next!r} does not advance from {t_n!r}")
            window = cfg.tolerance * dt
            events = _recorded_events(order, outcomes, t_next, within=window)
            if any(abs(outcomes[sid].end_time - t_next) > ZERO_NORM * dt for sid in order):
                first_record = len(trace.records)
                outcomes, current, consumed, iterations = _fixed_point(
                    solvers, order, registry, t_n, t_next - t_n, cfg, trace, step, k_total, t_next,
                    stop_at_event=False, warm_start={slot: current[slot] for slot in slots})
                k_total += iterations
                trace.tag_event_time(first_record, earliest if has_event else None)
                for event in events:
                    outcomes[event.solver_id] = dataclasses.replace(
                        outcomes[event.solver_id],
                        event=SolverEvent(event.event_time, event.transition))
            _commit(solvers, order, registry, outcomes, current, {e.solver_id for e in events})
            _log_events(events)
            trace.close_step(StepSummary(step=step, t_start=t_n, t_end=t_next, iterations=k_total,
                                         horizon_iterations=outer + 1, events=events,
                                         consumed=consumed,
                                         first_event_time=earliest if has_event else None))
            return registry, {sid: solvers[sid].state for sid in order}, t_next, trace

        if has_event and earliest < horizon:
            upper = horizon if upper is None else min(upper, horizon)
        else:
            lower = max(lower, horizon)
        ceiling = upper if upper is not None else nominal_end
        proposal = cfg.event_relaxation * earliest + (1.0 - cfg.event_relaxation) * horizon
        if not lower < proposal < ceiling:
            proposal = 0.5 * (lower + ceiling)
        if upper is not None and upper - lower < cfg.tolerance * dt:
            proposal, forced = upper, True
        logger.debug(f"step {step}: horizon {horizon:.9g} -> {proposal:.9g} "
                     f"(first event {earliest:.9g}, bracket [{lower:.9g}, {ceiling:.9g}])")
        horizon = proposal
        warm = {slot: current[slot] for slot in slots}

    raise NonConvergenceError(
        f"step {step}: event horizon did not settle in {cfg.max_sync_iterations} iterations", trace)


class CoupledSystem:
    """Owns the solvers, the registry and the clock of one coupled run"""

    def __init__(self, solvers: Mapping[Hashable, CoupledSolver], config: CouplingConfig,
                 registry: Optional[InterfaceRegistry] = None, t_start: float = 0.0):
        self.solvers = dict(solvers)
        self.config = config
        self.order = resolve_order(self.solvers, config.solver_order)
        self.config.solver_order = self.order
        self.registry = registry if registry is not None else self._initial_registry()
        self.time = t_start
        self.step_index = 0
        self.trace = IterationTrace()

    def _initial_registry(self) -> InterfaceRegistry:
        registry = InterfaceRegistry()
        for i in self.order:
            for j in self.solvers[i].neighbors:
                if j not in self.solvers or i not in self.solvers[j].neighbors:
                    raise ConfigurationError(f"interface ({i}, {j}) is not declared by both solvers")
                if (i, j) not in registry:
                    registry.connect(i, j)
        for i in self.order:
            for j, value in self.solvers[i].initial_outputs().items():
                registry.set_interface(i, j, value)
        return registry

    def step(self, dt: Optional[float] = None) -> StepSummary:
        dt = self.config.macro_step if dt is None else dt
        scheme = self.config.scheme
        if scheme is Scheme.ICS and self.config.synchronize_events:
            _, _, t_next, _ = sync_step(self.solvers, self.registry, self.time, dt, self.config,
                                        self.trace, self.step_index)
        elif scheme is Scheme.ICS:
            ics_step(self.solvers, self.registry, self.time, dt, self.config, self.trace,
                     self.step_index)
            t_next = self.trace.last_step.t_end
        else:
            ecs_step(self.solvers, self.registry, self.time, dt, self.order,
                     jacobi=scheme is Scheme.ECS_JACOBI, trace=self.trace, step=self.step_index)
            t_next = self.trace.last_step.t_end
        self.time = t_next
        self.step_index += 1
        return self.trace.last_step

    def states(self) -> Dict[Hashable, SubdomainState]:
        return {sid: self.solvers[sid].state for sid in self.order}
