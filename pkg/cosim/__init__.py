"""
Co-simulation Kernel
====================

Partitioned coupling of black-box lumped-parameter thermal solvers:
explicit and implicit coupling schemes, event synchronization, stability
diagnostics and the interface energy ledger.
"""

from dotenv import load_dotenv

load_dotenv(override=False)

from .config import Integration, InterfaceRole, RelaxationKind, RunSettings, Scheme, SweepParameter  # noqa: E402
from .coupling import (CoupledSystem, CouplingConfig, IterationTrace, ecs_step, ics_step,  # noqa: E402
                       sync_step)
from .errors import (ConfigurationError, CosimError, FieldValidationError,  # noqa: E402
                     InterfaceLookupError, NonConvergenceError, NonMeltingMaterialError,
                     PreconditionError, SolverFailure, SynchronizationError)
from .model import InterfaceRegistry, InterfaceVariables, SubdomainState, project, set_interface  # noqa: E402
from .scenario import Scenario, load_scenario  # noqa: E402

__version__ = "1.0.0"

__all__ = [
    "ConfigurationError", "CosimError", "CoupledSystem", "CouplingConfig", "FieldValidationError",
    "Integration", "InterfaceLookupError", "InterfaceRegistry", "InterfaceRole", "InterfaceVariables",
    "IterationTrace", "NonConvergenceError", "NonMeltingMaterialError", "PreconditionError",
    "RelaxationKind", "RunSettings", "Scenario", "Scheme", "SolverFailure", "SubdomainState",
    "SweepParameter", "SynchronizationError", "ecs_step", "ics_step", "load_scenario", "project",
    "set_interface", "sync_step",
]
