"""
Scenario Files
==============

YAML scenario grammar, validated with pydantic. A scenario holds all the
physics of a run: solver definitions, coupling settings and the end
condition. See README.md for the grammar.
"""

from pathlib import Path
from typing import List, Literal, Optional, Tuple, Union

import yaml
from pydantic import (BaseModel, ConfigDict, Field, NonNegativeFloat, PositiveFloat,
                      ValidationError, field_validator, model_validator)

from .config import SCENARIO_DIR, Integration, InterfaceRole, RelaxationKind, Scheme
from .errors import ConfigurationError, FieldValidationError
from .solvers.base import Phase

BUILTIN_SCENARIOS = ("stability-ecs", "stability-ics", "events", "comparison-1d")


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid", use_enum_values=False)


class MaterialSection(_Section):
    density: PositiveFloat
    heat_capacity: PositiveFloat
    thermal_conductivity: PositiveFloat
    fusion_enthalpy: NonNegativeFloat = 0.0
    fusion_temperature: PositiveFloat = 1.0e9
    residual_power: float = 0.0


class GeometrySection(_Section):
    cross_section_area: PositiveFloat = 1.0
    characteristic_length: Optional[PositiveFloat] = None
    cylindrical: bool = True


class BoundarySection(_Section):
    schedule: List[Tuple[float, PositiveFloat]] = Field(min_length=1)
    sign: Literal[1, -1] = 1

    @field_validator("schedule")
    @classmethod
    def _increasing(cls, schedule):
        times = [t for t, _ in schedule]
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ValueError("schedule times must be strictly increasing")
        return schedule


class InitialSection(_Section):
    mass: PositiveFloat
    temperature: PositiveFloat
    face_temperature: Optional[PositiveFloat] = None


class ThresholdSection(_Section):
    melt_trigger: PositiveFloat
    residual_mass: NonNegativeFloat


class SolverSection(_Section):
    id: str
    kind: Literal["lumped", "reference_1d"] = "lumped"
    neighbor: str
    role: InterfaceRole
    integration: Integration = Integration.IMPLICIT_EULER
    micro_step: Optional[PositiveFloat] = None
    boundary_exchange: bool = False
    material: MaterialSection
    geometry: GeometrySection = Field(default_factory=GeometrySection)
    initial: InitialSection
    boundary: BoundarySection
    thresholds: Optional[ThresholdSection] = None
    phase: Phase = Phase.HEATING
    nodes: int = Field(default=50, ge=3)

    @field_validator("id", "neighbor", mode="before")
    @classmethod
    def _as_text(cls, value):
        return str(value)


class RelaxationSection(_Section):
    kind: RelaxationKind = RelaxationKind.CONSTANT
    omega: PositiveFloat = 1.0
    omega_max: PositiveFloat = 1.0


class CouplingSection(_Section):
    scheme: Scheme
    macro_step: PositiveFloat
    tolerance: PositiveFloat = 1.0e-4
    max_iterations: int = Field(default=50, ge=1)
    max_sync_iterations: int = Field(default=100, ge=1)
    relaxation: RelaxationSection = Field(default_factory=RelaxationSection)
    event_relaxation: float = Field(default=0.5, gt=0.0, lt=1.0)
    order: List[str] = Field(default_factory=list)
    synchronize_events: bool = True

    @field_validator("order", mode="before")
    @classmethod
    def _order_as_text(cls, value):
        return [str(v) for v in value] if value is not None else []


class StationaritySection(_Section):
    # unset values fall back to the shared harness defaults
    threshold: Optional[PositiveFloat] = None
    window: Optional[int] = Field(default=None, ge=1)
    solver: Optional[str] = None


class EndSection(_Section):
    t_end: PositiveFloat
    stationarity: Optional[StationaritySection] = None


class OutputSection(_Section):
    series: bool = True
    trace: bool = True
    ledger: bool = True
    events: bool = True


class Scenario(_Section):
    """A complete, self-contained two-domain run definition"""
    name: str
    description: str = ""
    solvers: List[SolverSection] = Field(min_length=2, max_length=2)
    coupling: CouplingSection
    end: EndSection
    outputs: OutputSection = Field(default_factory=OutputSection)

    @model_validator(mode="after")
    def _references_resolve(self) -> 'Scenario':
        ids = [s.id for s in self.solvers]
        if len(set(ids)) != len(ids):
            raise ValueError(f"solver ids must be unique, got {ids}")
        by_id = {s.id: s for s in self.solvers}
        for solver in self.solvers:
            if solver.neighbor not in by_id:
                raise ValueError(f"solver {solver.id}: neighbor {solver.neighbor!r} is not defined")
            if by_id[solver.neighbor].neighbor != solver.id:
                raise ValueError(f"solver {solver.id}: interface with {solver.neighbor} is one-sided")
        if self.coupling.order and sorted(self.coupling.order) != sorted(ids):
            raise ValueError(f"coupling.order {self.coupling.order} must list {ids} exactly once")
        stationarity = self.end.stationarity
        if stationarity is not None and stationarity.solver is not None and stationarity.solver not in by_id:
            raise ValueError(f"end.stationarity.solver {stationarity.solver!r} is not defined")
        return self

    @property
    def order(self) -> List[str]:
        return list(self.coupling.order) or self.domains

    @property
    def domains(self) -> List[str]:
        """Solver ids in file order; the first is domain 1 of every report"""
        return [s.id for s in self.solvers]

    def solver(self, solver_id: str) -> SolverSection:
        for section in self.solvers:
            if section.id == solver_id:
                return section
        raise KeyError(solver_id)

    def to_dict(self) -> dict:
        return self.model_dump(mode="json")


def _field_path(error: dict) -> str:
    return ".".join(str(part) for part in error["loc"]) or "<root>"


def parse_scenario(data: dict) -> Scenario:
    """Validate a scenario tree; the first offending field names the error"""
    try:
        return Scenario.model_validate(data)
    except ValidationError as e:
        first = e.errors()[0]
        raise FieldValidationError(_field_path(first), first["msg"], first.get("input")) from e


def resolve_scenario_path(name_or_path: Union[str, Path]) -> Path:
    path = Path(name_or_path)
    if path.exists():
        return path
    builtin = SCENARIO_DIR / f"{name_or_path}.yaml"
    if builtin.exists():
        return builtin
    raise ConfigurationError(
        f"scenario {name_or_path!r} is neither a file nor one of {', '.join(BUILTIN_SCENARIOS)}")


def load_scenario(name_or_path: Union[str, Path]) -> Scenario:
    path = resolve_scenario_path(name_or_path)
    with open(path, 'r') as f:
        data = yaml.safe_load(f)
    if not isinstance(data, dict):
        raise FieldValidationError("<root>", "scenario file must hold a mapping", type(data).__name__)
    return parse_scenario(data)


def dump_scenario(scenario: Scenario) -> str:
    return yaml.safe_dump(scenario.to_dict(), sort_keys=False)


def save_scenario(scenario: Scenario, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'w') as f:
        f.write(dump_scenario(scenario))
    return path
