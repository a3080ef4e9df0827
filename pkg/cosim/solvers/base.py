"""
Solver Contract
===============

Configuration, outcome and state-machine types shared by every black-box
solver, and the protocol the coupling drivers program against.
"""

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import (Any, Dict, FrozenSet, Hashable, Mapping, Optional, Protocol, Tuple, Union,
                    runtime_checkable)

from ..config import Integration
from ..errors import FieldValidationError
from ..model import (BoundarySpec, GeometrySpec, InterfaceVariables, InterfaceWaveform, MaterialProps,
                     SubdomainState)


class Phase(str, Enum):
    HEATING = "heating"
    MELTING = "melting"
    EMPTY = "empty"


class Guard(str, Enum):
    FACE_TEMPERATURE_REACHED = "T_face >= T*"
    MASS_FLOW_REVERSED = "mdot < 0"
    RESIDUAL_MASS_REACHED = "m <= m_eps"


@dataclass(frozen=True)
class SolverConfig:
    """Per-subdomain integration settings"""
    micro_step: float
    integration: Integration
    material: MaterialProps
    geometry: GeometrySpec
    boundary: BoundarySpec
    boundary_exchange: bool = False

    def __post_init__(self):
        if not (math.isfinite(self.micro_step) and self.micro_step > 0.0):
            raise FieldValidationError("micro_step", "must be > 0", self.micro_step)
        object.__setattr__(self, "integration", Integration(self.integration))

    @property
    def exchange_factor(self) -> float:
        """Weight of the external-boundary face in the energy balance"""
        return 1.0 if self.boundary_exchange else 0.0


@dataclass(frozen=True)
class ThresholdParams:
    melt_trigger: float
    residual_mass: float

    def __post_init__(self):
        if not self.melt_trigger > 0.0:
            raise FieldValidationError("melt_trigger", "must be > 0", self.melt_trigger)
        if not self.residual_mass >= 0.0:
            raise FieldValidationError("residual_mass", "must be >= 0", self.residual_mass)


TRANSITION_GRAPH: FrozenSet[Tuple[Phase, Phase, Guard]] = frozenset({
    (Phase.HEATING, Phase.MELTING, Guard.FACE_TEMPERATURE_REACHED),
    (Phase.MELTING, Phase.HEATING, Guard.MASS_FLOW_REVERSED),
    (Phase.MELTING, Phase.EMPTY, Guard.RESIDUAL_MASS_REACHED),
})


@dataclass(frozen=True)
class StateTransition:
    from_phase: Phase
    to_phase: Phase
    guard: Guard

    def __post_init__(self):
        if (self.from_phase, self.to_phase, self.guard) not in TRANSITION_GRAPH:
            raise FieldValidationError(
                "transition", "not an edge of the phase graph",
                (self.from_phase.value, self.to_phase.value, self.guard.value))

    @property
    def label(self) -> str:
        return f"{self.from_phase.value}->{self.to_phase.value}"


HEATING_TO_MELTING = StateTransition(Phase.HEATING, Phase.MELTING, Guard.FACE_TEMPERATURE_REACHED)
MELTING_TO_HEATING = StateTransition(Phase.MELTING, Phase.HEATING, Guard.MASS_FLOW_REVERSED)
MELTING_TO_EMPTY = StateTransition(Phase.MELTING, Phase.EMPTY, Guard.RESIDUAL_MASS_REACHED)


@dataclass(frozen=True)
class SolverEvent:
    """Guard crossing located inside a macro step"""
    event_time: float
    transition: StateTransition


@dataclass(frozen=True)
class SolverOutcome:
    """Result of advancing one solver over [t_n, end_time]

    truncated is True when integration stopped at the event time; when an
    event is only recorded the solver integrated the whole step in its old
    phase. outputs hold the end values; a solver that samples its outputs
    over the step also returns them as waveforms.
    """
    outputs: Dict[Hashable, InterfaceVariables]
    new_state: SubdomainState
    end_time: float
    event: Optional[SolverEvent] = None
    truncated: bool = False
    extra: Dict[str, Any] = field(default_factory=dict)
    waveforms: Dict[Hashable, InterfaceWaveform] = field(default_factory=dict)

    def exchanged(self, neighbor: Hashable) -> Union[InterfaceVariables, InterfaceWaveform]:
        """What a consumer of this step sees: the waveform when one was sampled"""
        return self.waveforms.get(neighbor, self.outputs[neighbor])

    @property
    def output(self) -> InterfaceVariables:
        """The single outgoing interface of a one-interface solver"""
        if len(self.outputs) != 1:
            raise ValueError("outcome has several outgoing interfaces")
        return next(iter(self.outputs.values()))


@runtime_checkable
class CoupledSolver(Protocol):
    """What a coupling driver may see of a solver

    advance() never mutates the committed state; commit() is the only way
    forward in time.
    """
    solver_id: Hashable

    @property
    def neighbors(self) -> FrozenSet[Hashable]: ...

    @property
    def phase(self) -> Phase: ...

    @property
    def state(self) -> SubdomainState: ...

    def exchanged_fields(self) -> Tuple[str, ...]: ...

    def initial_outputs(self) -> Dict[Hashable, InterfaceVariables]: ...

    def advance(self, inputs: Mapping[Hashable, Union[InterfaceVariables, InterfaceWaveform]],
                t_n: float, dt: float, stop_at_event: bool = True) -> SolverOutcome: ...

    def commit(self, outcome: SolverOutcome, apply_transition: bool = True) -> None: ...

    def checkpoint(self) -> Any: ...

    def restore(self, snapshot: Any) -> None: ...


def step_state_machine(solver: CoupledSolver, t_n: float, dt: float,
                       inputs: Mapping[Hashable, InterfaceVariables]) -> SolverOutcome:
    """Advance the solver in its current phase, stopping at the first guard crossing

    The phase switch is not applied here; the coupling driver commits it.
    """
    return solver.advance(inputs, t_n, dt, stop_at_event=True)
