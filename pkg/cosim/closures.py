"""
Closure Laws
============

Algebraic relations closing the lumped equations: stationary conduction flux
through a slab with a quadratic temperature profile, the geometry update of a
cylinder and the two interface equilibrium systems (mobile melting front and
fixed thermal contact).

Every function here is pure and thread-safe.
"""

import math
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Tuple

from .errors import FieldValidationError, NonMeltingMaterialError
from .model import GeometrySpec, InterfaceVariables


@dataclass(frozen=True)
class StationaryClosureInput:
    """Face temperatures around one slab; face_temperature is the face the flux leaves through"""
    avg_temperature: float
    opposite_face_temperature: float
    face_temperature: float
    conductivity: float
    length: float

    def __post_init__(self):
        for name in ("avg_temperature", "opposite_face_temperature", "face_temperature"):
            if not math.isfinite(getattr(self, name)):
                raise FieldValidationError(name, "must be finite", getattr(self, name))
        if not (self.length > 0.0 and math.isfinite(self.length)):
            raise FieldValidationError("length", "must be > 0", self.length)
        if not (self.conductivity > 0.0 and math.isfinite(self.conductivity)):
            raise FieldValidationError("conductivity", "must be > 0", self.conductivity)

    @property
    def conductance(self) -> float:
        return self.conductivity / self.length


def stationary_flux(data: StationaryClosureInput) -> float:
    """Outgoing flux through the face: lambda (6 T - 4 T_face - 2 T_opposite) / L"""
    return data.conductance * (6.0 * data.avg_temperature
                               - 4.0 * data.face_temperature
                               - 2.0 * data.opposite_face_temperature)


def face_temperature_for_flux(flux: float, avg_temperature: float,
                              opposite_face_temperature: float,
                              conductivity: float, length: float) -> float:
    """Inverse of stationary_flux: the face temperature producing a given outgoing flux"""
    if length <= 0.0 or conductivity <= 0.0:
        raise FieldValidationError("length" if length <= 0.0 else "conductivity", "must be > 0")
    conductance = conductivity / length
    return (6.0 * avg_temperature - 2.0 * opposite_face_temperature - flux / conductance) / 4.0


def cylinder_area(geometry: GeometrySpec, density: float, mass: float) -> Tuple[float, float]:
    """Return (A, L) with L recomputed from the current mass so that m = rho A L"""
    if not density > 0.0:
        raise FieldValidationError("density", "must be > 0", density)
    if not (math.isfinite(mass) and mass >= 0.0):
        raise FieldValidationError("mass", "must be >= 0", mass)
    area = geometry.cross_section_area
    return area, mass / (density * area)


def stefan_balance(flux_ij: float, flux_ji: float, area_ij: float, area_ji: float,
                   fusion_enthalpy: float) -> float:
    """Melting rate mdot_ij = (phi_ij A_ij + phi_ji A_ji) / dh_fus at a mobile front

    The caller sets mdot_ji = -mdot_ij and pins both face temperatures to T_fus.
    """
    if fusion_enthalpy == 0.0:
        raise NonMeltingMaterialError("fusion enthalpy is zero at a mobile front")
    if fusion_enthalpy < 0.0:
        raise FieldValidationError("fusion_enthalpy", "must be > 0", fusion_enthalpy)
    return (flux_ij * area_ij + flux_ji * area_ji) / fusion_enthalpy


def fixed_interface_residuals(b_ij: InterfaceVariables,
                              b_ji: InterfaceVariables) -> Tuple[float, float, float]:
    """(mass, temperature, energy) residuals of a fixed thermal contact; all zero at equilibrium"""
    mass_residual = abs(b_ij.mass_flow_rate) + abs(b_ji.mass_flow_rate)
    temperature_residual = b_ij.temperature - b_ji.temperature
    energy_residual = b_ij.heat_flux * b_ij.area + b_ji.heat_flux * b_ji.area
    return mass_residual, temperature_residual, energy_residual


class ClosureLaw(ABC):
    """Face flux law of a slab; the stationary law is the only one shipped"""

    @abstractmethod
    def flux(self, avg_temperature: float, face_temperature: float,
             opposite_face_temperature: float) -> float:
        ...

    @abstractmethod
    def face_temperature(self, flux: float, avg_temperature: float,
                         opposite_face_temperature: float) -> float:
        ...


class StationaryClosure(ClosureLaw):
    """Quadratic-profile conduction closure of a slab of conductivity lambda and height L"""

    def __init__(self, conductivity: float, length: float):
        if not conductivity > 0.0:
            raise FieldValidationError("conductivity", "must be > 0", conductivity)
        if not length > 0.0:
            raise FieldValidationError("length", "must be > 0", length)
        self.conductivity = conductivity
        self.length = length

    @property
    def conductance(self) -> float:
        return self.conductivity / self.length

    def flux(self, avg_temperature: float, face_temperature: float,
             opposite_face_temperature: float) -> float:
        return stationary_flux(StationaryClosureInput(
            avg_temperature=avg_temperature,
            opposite_face_temperature=opposite_face_temperature,
            face_temperature=face_temperature,
            conductivity=self.conductivity,
            length=self.length,
        ))

    def face_temperature(self, flux: float, avg_temperature: float,
                         opposite_face_temperature: float) -> float:
        return face_temperature_for_flux(flux, avg_temperature, opposite_face_temperature,
                                         self.conductivity, self.length)
