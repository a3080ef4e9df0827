"""
Error Types
===========

Exception hierarchy shared by the kernel, the harness and the CLI.
"""

from typing import Any, Hashable, Optional, Tuple


class CosimError(Exception):
    """Base class for every error raised by the co-simulation kernel"""


class FieldValidationError(CosimError, ValueError):
    """A value violates the invariant of the named field"""

    def __init__(self, field: str, message: str, value: Any = None):
        self.field = field
        self.value = value
        super().__init__(f"{field}: {message}" + ("" if value is None else f" (got {value!r})"))


class InterfaceLookupError(CosimError, KeyError):
    """Directed interface pair is unknown or not populated"""

    def __init__(self, pair: Tuple[Hashable, Hashable], reason: str = "not registered"):
        self.pair = pair
        super().__init__(f"interface ({pair[0]}, {pair[1]}) {reason}")

    def __str__(self) -> str:
        return self.args[0]


class ConfigurationError(CosimError):
    """Inconsistent solver, coupling or scenario configuration"""


class PreconditionError(CosimError):
    """Operation called outside its precondition"""


class NonMeltingMaterialError(CosimError, ZeroDivisionError):
    """Stefan balance evaluated with a zero fusion enthalpy"""


class SolverFailure(CosimError):
    """A solver failed while advancing; carries the solver id"""

    def __init__(self, solver_id: Hashable, message: str):
        self.solver_id = solver_id
        super().__init__(f"solver {solver_id}: {message}")


class NonConvergenceError(CosimError):
    """Interface or event iteration did not converge; carries the trace"""

    def __init__(self, message: str, trace: Optional[Any] = None):
        self.trace = trace
        super().__init__(message)


class SynchronizationError(CosimError):
    """Committed time does not advance the coupled clock"""
