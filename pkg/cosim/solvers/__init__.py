"""
Black-box solvers: lumped slabs with a phase state machine and a 1D reference.
"""

from .base import (HEATING_TO_MELTING, MELTING_TO_EMPTY, MELTING_TO_HEATING, TRANSITION_GRAPH,
                   CoupledSolver, Guard, Phase, SolverConfig, SolverEvent, SolverOutcome,
                   StateTransition, ThresholdParams, step_state_machine)
from .lumped import (LumpedSolver, advance_empty, advance_heating, advance_melting,
                     slab_dimensions)
from .reference_1d import Reference1DSolver, advance_1d_reference, stable_micro_step

__all__ = [
    "CoupledSolver", "Guard", "HEATING_TO_MELTING", "LumpedSolver", "MELTING_TO_EMPTY",
    "MELTING_TO_HEATING", "Phase", "Reference1DSolver", "SolverConfig", "SolverEvent",
    "SolverOutcome", "StateTransition", "TRANSITION_GRAPH", "ThresholdParams",
    "advance_1d_reference", "advance_empty", "advance_heating", "advance_melting",
    "slab_dimensions", "stable_micro_step", "step_state_machine",
]
