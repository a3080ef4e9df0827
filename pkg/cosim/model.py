"""
Model Core
==========

Domain types shared by every module: subdomain state, material, geometry and
boundary data, directed interface variables and the interface registry that
plays the role of the interface projector.

All quantities are SI floats. Interface variables are stored per directed pair
(b_ij and b_ji separately); equilibrium between the two directions is the
outcome of a coupling scheme, never a storage rule.
"""

import bisect
import dataclasses
import math
from dataclasses import dataclass
from typing import Dict, FrozenSet, Hashable, Iterable, Iterator, Optional, Sequence, Tuple

import numpy as np

from .errors import FieldValidationError, InterfaceLookupError

SubdomainId = Hashable
Pair = Tuple[SubdomainId, SubdomainId]

INTERFACE_FIELDS = ("heat_flux", "temperature", "mass_flow_rate", "area")


def _require_finite(name: str, value: float) -> None:
    if not math.isfinite(value):
        raise FieldValidationError(name, "must be finite", value)


def _require_positive(name: str, value: float) -> None:
    _require_finite(name, value)
    if value <= 0.0:
        raise FieldValidationError(name, "must be > 0", value)


def _require_non_negative(name: str, value: float) -> None:
    _require_finite(name, value)
    if value < 0.0:
        raise FieldValidationError(name, "must be >= 0", value)


@dataclass(frozen=True)
class SubdomainState:
    """State vector u_i = (m_i, T_i) of one subdomain"""
    mass: float
    avg_temperature: float

    def __post_init__(self):
        _require_non_negative("mass", self.mass)
        _require_positive("avg_temperature", self.avg_temperature)


@dataclass(frozen=True)
class MaterialProps:
    """Constant material data of a pure body"""
    density: float
    heat_capacity: float
    thermal_conductivity: float
    fusion_enthalpy: float = 0.0
    fusion_temperature: float = 1.0e9
    residual_power: float = 0.0

    def __post_init__(self):
        _require_positive("density", self.density)
        _require_positive("heat_capacity", self.heat_capacity)
        _require_positive("thermal_conductivity", self.thermal_conductivity)
        _require_non_negative("fusion_enthalpy", self.fusion_enthalpy)
        _require_positive("fusion_temperature", self.fusion_temperature)
        _require_finite("residual_power", self.residual_power)


@dataclass(frozen=True)
class GeometrySpec:
    """Slab geometry; a cylinder of cross section A and height L"""
    characteristic_length: float
    cross_section_area: float = 1.0
    volume: Optional[float] = None
    cylindrical: bool = True

    def __post_init__(self):
        _require_positive("characteristic_length", self.characteristic_length)
        _require_positive("cross_section_area", self.cross_section_area)
        if self.volume is None:
            object.__setattr__(self, "volume", self.cross_section_area * self.characteristic_length)
        _require_positive("volume", self.volume)
        if self.cylindrical and not math.isclose(
                self.volume, self.cross_section_area * self.characteristic_length, rel_tol=1e-12):
            raise FieldValidationError("volume", "cylinder requires V = A*L", self.volume)

    def with_length(self, length: float) -> 'GeometrySpec':
        return GeometrySpec(characteristic_length=length,
                            cross_section_area=self.cross_section_area,
                            cylindrical=self.cylindrical,
                            volume=None if self.cylindrical else self.volume)


@dataclass(frozen=True)
class BoundarySpec:
    """External boundary: right-continuous piecewise-constant temperature schedule

    sign only records whether the face flux is reported as heating (+1) or
    cooling (-1); the energy balance is written with outgoing fluxes and does
    not depend on it.
    """
    schedule: Tuple[Tuple[float, float], ...]
    sign: int = 1

    def __post_init__(self):
        schedule = tuple((float(t), float(value)) for t, value in self.schedule)
        if not schedule:
            raise FieldValidationError("schedule", "needs at least one (time, value) pair")
        times = [t for t, _ in schedule]
        if any(b <= a for a, b in zip(times, times[1:])):
            raise FieldValidationError("schedule", "times must be strictly increasing", times)
        for t, value in schedule:
            _require_finite("schedule.time", t)
            _require_positive("schedule.temperature", value)
        if self.sign not in (1, -1):
            raise FieldValidationError("sign", "must be +1 or -1", self.sign)
        object.__setattr__(self, "schedule", schedule)

    @classmethod
    def constant(cls, temperature: float, sign: int = 1) -> 'BoundarySpec':
        return cls(schedule=((0.0, temperature),), sign=sign)

    def temperature_at(self, t: float) -> float:
        """Last scheduled value at or before t; the first value before the schedule starts"""
        times = [time for time, _ in self.schedule]
        index = bisect.bisect_right(times, t) - 1
        return self.schedule[max(index, 0)][1]


@dataclass(frozen=True)
class InterfaceVariables:
    """b_ij = (phi_ij, T_ij, mdot_ij, A_ij) seen from subdomain i towards j

    heat_flux and mass_flow_rate are outgoing quantities: positive values leave
    subdomain i through the interface.
    """
    heat_flux: float = 0.0
    temperature: float = 0.0
    mass_flow_rate: float = 0.0
    area: float = 1.0

    def __post_init__(self):
        _require_finite("heat_flux", self.heat_flux)
        _require_finite("temperature", self.temperature)
        _require_finite("mass_flow_rate", self.mass_flow_rate)
        _require_positive("area", self.area)

    def replace(self, **changes: float) -> 'InterfaceVariables':
        return dataclasses.replace(self, **changes)

    def as_vector(self, fields: Sequence[str]) -> np.ndarray:
        return np.array([getattr(self, name) for name in fields], dtype=float)

    def with_vector(self, fields: Sequence[str], values: Iterable[float]) -> 'InterfaceVariables':
        return dataclasses.replace(self, **{name: float(v) for name, v in zip(fields, values)})


@dataclass(frozen=True)
class InterfaceWaveform:
    """Interface variables sampled at the end of every micro step of one advance

    start is the committed value at t_start. Between samples the waveform is
    linear; past the last sample it holds the last value. The scalar fields
    read the end value, so a waveform can stand wherever a single
    InterfaceVariables is read.
    """
    t_start: float
    start: InterfaceVariables
    times: Tuple[float, ...]
    samples: Tuple[InterfaceVariables, ...]

    def __post_init__(self):
        object.__setattr__(self, "times", tuple(float(t) for t in self.times))
        object.__setattr__(self, "samples", tuple(self.samples))
        if len(self.times) != len(self.samples):
            raise FieldValidationError("samples", "need one sample per time",
                                       (len(self.times), len(self.samples)))
        grid = (self.t_start,) + self.times
        if any(b <= a for a, b in zip(grid, grid[1:])):
            raise FieldValidationError("times", "must increase strictly from t_start", grid)

    @classmethod
    def constant(cls, value: InterfaceVariables, t_start: float,
                 times: Sequence[float]) -> 'InterfaceWaveform':
        return cls(t_start, value, tuple(times), tuple(value for _ in times))

    @property
    def end(self) -> InterfaceVariables:
        return self.samples[-1] if self.samples else self.start

    @property
    def end_time(self) -> float:
        return self.times[-1] if self.times else self.t_start

    @property
    def heat_flux(self) -> float:
        return self.end.heat_flux

    @property
    def temperature(self) -> float:
        return self.end.temperature

    @property
    def mass_flow_rate(self) -> float:
        return self.end.mass_flow_rate

    @property
    def area(self) -> float:
        return self.end.area

    def at(self, t: float) -> InterfaceVariables:
        if not self.times or t >= self.times[-1]:
            return self.end
        if t <= self.t_start:
            return self.start
        index = bisect.bisect_left(self.times, t)
        right = self.samples[index]
        if self.times[index] == t:
            return right
        t_left = self.t_start if index == 0 else self.times[index - 1]
        left = self.start if index == 0 else self.samples[index - 1]
        weight = (t - t_left) / (self.times[index] - t_left)
        return left.with_vector(INTERFACE_FIELDS, (1.0 - weight) * left.as_vector(INTERFACE_FIELDS)
                                + weight * right.as_vector(INTERFACE_FIELDS))

    def resample(self, times: Sequence[float]) -> 'InterfaceWaveform':
        return InterfaceWaveform(self.t_start, self.start, tuple(times),
                                 tuple(self.at(t) for t in times))

    def as_vector(self, fields: Sequence[str]) -> np.ndarray:
        """Samples after t_start, sample-major"""
        if not self.samples:
            return np.zeros(0)
        return np.concatenate([sample.as_vector(fields) for sample in self.samples])

    def with_vector(self, fields: Sequence[str], values: Iterable[float]) -> 'InterfaceWaveform':
        rows = np.asarray(list(values), dtype=float).reshape(len(self.samples), len(fields))
        return dataclasses.replace(self, samples=tuple(
            sample.with_vector(fields, row) for sample, row in zip(self.samples, rows)))


def end_value(value) -> InterfaceVariables:
    """The single value a registry slot keeps for an exchanged quantity"""
    return value.end if isinstance(value, InterfaceWaveform) else value


def value_at(value, t: float) -> InterfaceVariables:
    """Read an input at t; a plain InterfaceVariables is constant in time"""
    return value.at(t) if isinstance(value, InterfaceWaveform) else value


class InterfaceRegistry:
    """Directed interface slots b_ij with symmetric keys

    A registered pair always has both directions; a direction can be registered
    but not yet populated, in which case project() refuses to read it.
    Single writer: exactly one coupling driver mutates a registry.
    """

    def __init__(self):
        self._slots: Dict[Pair, Optional[InterfaceVariables]] = {}

    def connect(self, i: SubdomainId, j: SubdomainId,
                b_ij: Optional[InterfaceVariables] = None,
                b_ji: Optional[InterfaceVariables] = None) -> 'InterfaceRegistry':
        if i == j:
            raise FieldValidationError("pair", "an interface joins two distinct subdomains", (i, j))
        self._slots[(i, j)] = b_ij
        self._slots[(j, i)] = b_ji
        return self

    def project(self, i: SubdomainId, j: SubdomainId) -> InterfaceVariables:
        """Return b_ij without mutation"""
        if (i, j) not in self._slots:
            raise InterfaceLookupError((i, j))
        value = self._slots[(i, j)]
        if value is None:
            raise InterfaceLookupError((i, j), "not populated")
        return value

    def set_interface(self, i: SubdomainId, j: SubdomainId,
                      value: InterfaceVariables) -> 'InterfaceRegistry':
        if (i, j) not in self._slots:
            raise InterfaceLookupError((i, j))
        if not isinstance(value, InterfaceVariables):
            raise FieldValidationError("value", "must be InterfaceVariables", value)
        self._slots[(i, j)] = value
        return self

    def is_populated(self, i: SubdomainId, j: SubdomainId) -> bool:
        return self._slots.get((i, j)) is not None

    def neighbors(self, i: SubdomainId) -> FrozenSet[SubdomainId]:
        """N_i: every j such that (i, j) is registered"""
        return frozenset(j for (a, j) in self._slots if a == i)

    def degree(self, i: SubdomainId) -> int:
        return len(self.neighbors(i))

    def pairs(self) -> Iterator[Pair]:
        return iter(list(self._slots))

    def __contains__(self, pair: Pair) -> bool:
        return pair in self._slots

    def copy(self) -> 'InterfaceRegistry':
        clone = InterfaceRegistry()
        clone._slots = dict(self._slots)
        return clone

    def snapshot(self) -> Dict[Pair, Optional[InterfaceVariables]]:
        return dict(self._slots)

    def restore(self, snapshot: Dict[Pair, Optional[InterfaceVariables]]) -> None:
        self._slots = dict(snapshot)


def project(registry: InterfaceRegistry, i: SubdomainId, j: SubdomainId) -> InterfaceVariables:
    return registry.project(i, j)


def set_interface(registry: InterfaceRegistry, i: SubdomainId, j: SubdomainId,
                  value: InterfaceVariables) -> InterfaceRegistry:
    return registry.set_interface(i, j, value)
