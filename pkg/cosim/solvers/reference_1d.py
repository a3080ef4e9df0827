"""
1D Reference Solver
===================

Explicit finite-difference heat equation on a uniform grid, used to compare
the lumped coupling against a resolved one. Node 0 sits on the interface
face, the last node on the external boundary (Dirichlet at the boundary
temperature).
"""

import logging
import math
from typing import Dict, Hashable, Mapping, Tuple, Union

import numpy as np

from ..config import Integration, InterfaceRole
from ..errors import ConfigurationError, FieldValidationError, SolverFailure
from ..model import InterfaceVariables, InterfaceWaveform, SubdomainState, value_at
from .base import Phase, SolverConfig, SolverOutcome

logger = logging.getLogger("cosim.solvers.reference_1d")

FOURIER_LIMIT = 0.4
DEFAULT_NODES = 50


def stable_micro_step(cfg: SolverConfig, nodes: int) -> float:
    """Largest explicit step allowed by the mesh Fourier limit"""
    dz = cfg.geometry.characteristic_length / (nodes - 1)
    material = cfg.material
    return FOURIER_LIMIT * dz * dz * material.density * material.heat_capacity / material.thermal_conductivity


def face_flux(profile: np.ndarray, conductivity: float, dz: float) -> float:
    """Outgoing flux through node 0, second-order one-sided difference"""
    return conductivity * (-3.0 * profile[0] + 4.0 * profile[1] - profile[2]) / (2.0 * dz)


def _face_for_flux(profile: np.ndarray, flux: float, conductivity: float, dz: float) -> float:
    return (4.0 * profile[1] - profile[2] - 2.0 * dz * flux / conductivity) / 3.0


def profile_average(profile: np.ndarray) -> float:
    weights = np.ones_like(profile)
    weights[0] = weights[-1] = 0.5
    return float(np.average(profile, weights=weights))


def _validate(profile: np.ndarray, cfg: SolverConfig) -> float:
    if profile.ndim != 1 or profile.size < 3:
        raise FieldValidationError("profile", "needs at least 3 nodes", profile.shape)
    if cfg.integration is not Integration.EXPLICIT_EULER:
        raise ConfigurationError("the 1D reference solver integrates with explicit_euler only")
    limit = stable_micro_step(cfg, profile.size)
    if cfg.micro_step > limit:
        raise ConfigurationError(
            f"micro_step {cfg.micro_step} s exceeds the Fourier limit {limit:.6g} s "
            f"for {profile.size} nodes")
    return cfg.geometry.characteristic_length / (profile.size - 1)


def advance_1d_reference(profile: np.ndarray, incoming: Union[InterfaceVariables, InterfaceWaveform],
                         t_n: float, dt: float, cfg: SolverConfig, role: InterfaceRole
                         ) -> Tuple[InterfaceVariables, np.ndarray]:
    """Advance the profile over [t_n, t_n + dt]; returns (outgoing interface variables, new profile)"""
    profile = np.asarray(profile, dtype=float)
    dz = _validate(profile, cfg)
    role = InterfaceRole(role)
    material = cfg.material
    diffusivity = material.thermal_conductivity / (material.density * material.heat_capacity)
    area = cfg.geometry.cross_section_area

    def imposed_flux(time: float) -> float:
        reading = value_at(incoming, time)
        return -reading.heat_flux * reading.area / area

    current = profile.copy()
    end = t_n + dt
    t = t_n

    def impose_faces(values: np.ndarray, time: float) -> None:
        values[-1] = cfg.boundary.temperature_at(time)
        if role is InterfaceRole.DIRICHLET_RECEIVER:
            values[0] = value_at(incoming, time).temperature
        else:
            values[0] = _face_for_flux(values, imposed_flux(time), material.thermal_conductivity, dz)

    impose_faces(current, t)
    while t < end:
        remaining = end - t
        last = remaining <= cfg.micro_step * (1.0 + 1.0e-9)
        h = remaining if last else cfg.micro_step
        laplacian = (current[:-2] - 2.0 * current[1:-1] + current[2:]) / (dz * dz)
        current[1:-1] = current[1:-1] + h * diffusivity * laplacian
        t = end if last else t + h
        impose_faces(current, t)

    if role is InterfaceRole.DIRICHLET_RECEIVER:
        output = InterfaceVariables(heat_flux=face_flux(current, material.thermal_conductivity, dz),
                                    temperature=float(current[0]), area=area)
    else:
        output = InterfaceVariables(heat_flux=imposed_flux(end), temperature=float(current[0]), area=area)
    return output, current


class Reference1DSolver:
    """Coupled-solver wrapper around advance_1d_reference; always in the heating phase"""

    def __init__(self, solver_id: Hashable, neighbor: Hashable, config: SolverConfig,
                 role: InterfaceRole, initial_temperature: float,
                 initial_face_temperature: float, nodes: int = DEFAULT_NODES):
        if nodes < 3:
            raise FieldValidationError("nodes", "needs at least 3 nodes", nodes)
        self.solver_id = solver_id
        self.neighbor = neighbor
        self.config = config
        self.role = InterfaceRole(role)
        self.nodes = nodes
        self.dz = config.geometry.characteristic_length / (nodes - 1)
        self._profile = np.full(nodes, float(initial_temperature))
        self._profile[0] = initial_face_temperature
        self._mass = config.material.density * config.geometry.volume
        _validate(self._profile, config)
        self._outputs = self.initial_outputs()
        logger.debug(f"solver {solver_id}: {nodes} nodes, dz={self.dz:.4g} m, "
                     f"micro_step={config.micro_step} s (limit {stable_micro_step(config, nodes):.4g} s)")

    @property
    def neighbors(self):
        return frozenset({self.neighbor})

    @property
    def phase(self) -> Phase:
        return Phase.HEATING

    @property
    def profile(self) -> np.ndarray:
        return self._profile.copy()

    @property
    def state(self) -> SubdomainState:
        return SubdomainState(mass=self._mass, avg_temperature=profile_average(self._profile))

    def exchanged_fields(self) -> Tuple[str, ...]:
        if self.role is InterfaceRole.DIRICHLET_RECEIVER:
            return ("heat_flux",)
        return ("temperature",)

    def initial_outputs(self) -> Dict[Hashable, InterfaceVariables]:
        flux = face_flux(self._profile, self.config.material.thermal_conductivity, self.dz)
        return {self.neighbor: InterfaceVariables(
            heat_flux=flux, temperature=float(self._profile[0]),
            area=self.config.geometry.cross_section_area)}

    def advance(self, inputs: Mapping[Hashable, Union[InterfaceVariables, InterfaceWaveform]],
                t_n: float, dt: float, stop_at_event: bool = True) -> SolverOutcome:
        if self.neighbor not in inputs:
            raise SolverFailure(self.solver_id, f"missing input from {self.neighbor}")
        try:
            output, profile = advance_1d_reference(self._profile, inputs[self.neighbor], t_n, dt,
                                                   self.config, self.role)
        except FieldValidationError as e:
            raise SolverFailure(self.solver_id, str(e)) from e
        if not np.all(np.isfinite(profile)) or not math.isfinite(output.temperature):
            raise SolverFailure(self.solver_id, "profile is no longer finite")
        try:
            state = SubdomainState(mass=self._mass, avg_temperature=profile_average(profile))
        except FieldValidationError as e:
            raise SolverFailure(self.solver_id, str(e)) from e
        return SolverOutcome(outputs={self.neighbor: output}, new_state=state,
                             end_time=t_n + dt, extra={"profile": profile})

    def commit(self, outcome: SolverOutcome, apply_transition: bool = True) -> None:
        self._profile = np.array(outcome.extra["profile"], dtype=float)
        self._outputs = dict(outcome.outputs)

    def checkpoint(self):
        return self._profile.copy(), dict(self._outputs)

    def restore(self, snapshot) -> None:
        profile, outputs = snapshot
        self._profile = profile.copy()
        self._outputs = dict(outputs)
