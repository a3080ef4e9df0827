"""
Stability and Energy Analysis
=============================

Closed-form diagnostics of the two-slab coupled problem (pseudo-CFL ratio,
critical stiffness ratio, relaxation window, characteristic roots), the forms
the simulated toy schemes obey exactly, an oscillation-envelope detector for
simulated series, and the interface energy ledger.
"""

import cmath
import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from .config import Scheme
from .errors import FieldValidationError
from .solvers.base import SolverConfig

LEDGER_COLUMNS = ["step", "t", "dE_local", "dE_cumulative", "eps_local", "eps_cumulative"]


@dataclass(frozen=True)
class StabilityInputs:
    """tau_i = rho_i c_i L_i^2 / lambda_i, hbar = (lambda_1/L_1)/(lambda_2/L_2) and the macro step"""
    tau1: float
    tau2: float
    hbar: float
    dt: float

    def __post_init__(self):
        for name in ("tau1", "tau2", "hbar", "dt"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0.0):
                raise FieldValidationError(name, "must be > 0", value)

    @property
    def x1(self) -> float:
        return self.dt / self.tau1

    @property
    def x2(self) -> float:
        return self.dt / self.tau2

    @classmethod
    def from_configs(cls, first: SolverConfig, second: SolverConfig, dt: float,
                     first_mass: Optional[float] = None,
                     second_mass: Optional[float] = None) -> 'StabilityInputs':
        """Conduction times and stiffness ratio of two slabs; lengths follow the given masses"""
        def slab(cfg: SolverConfig, mass: Optional[float]) -> Tuple[float, float]:
            m = cfg.material
            length = cfg.geometry.characteristic_length
            if mass is not None and cfg.geometry.cylindrical:
                length = mass / (m.density * cfg.geometry.cross_section_area)
            tau = m.density * m.heat_capacity * length * length / m.thermal_conductivity
            return tau, m.thermal_conductivity / length

        tau1, conductance1 = slab(first, first_mass)
        tau2, conductance2 = slab(second, second_mass)
        return cls(tau1=tau1, tau2=tau2, hbar=conductance1 / conductance2, dt=dt)


def signed_r12(inputs: StabilityInputs) -> float:
    return (1.0 - 6.0 * inputs.x2) / (1.0 + 6.0 * inputs.x1) * inputs.hbar


def r12(inputs: StabilityInputs) -> float:
    """Pseudo-CFL ratio; the explicit scheme is linearly stable iff it is < 1"""
    return abs(1.0 - 6.0 * inputs.x2) / abs(1.0 + 6.0 * inputs.x1) * inputs.hbar


def hbar_crit(dt: float, tau1: float, tau2: float) -> float:
    """Stiffness ratio at which r12 = 1; +inf when dt = tau2/6"""
    denominator = 1.0 - 6.0 * dt / tau2
    if denominator == 0.0:
        return math.inf
    return abs((1.0 + 6.0 * dt / tau1) / denominator)


def omega_bounds(inputs: StabilityInputs) -> Tuple[float, float]:
    """(omega_max, omega_opt) = (2/(1+r12), 1/(1+r12))"""
    ratio = r12(inputs)
    return 2.0 / (1.0 + ratio), 1.0 / (1.0 + ratio)


def _quadratic_roots(a: float, b: float, c: float) -> Tuple[complex, complex]:
    # larger-magnitude root first, the other from the product of roots
    discriminant = b * b - 4.0 * a * c
    if discriminant >= 0.0:
        q = -0.5 * (b + math.copysign(math.sqrt(discriminant), b))
        if q == 0.0:
            return complex(0.0), complex(0.0)
        first, second = complex(q / a), complex(c / q)
    else:
        root = cmath.sqrt(discriminant)
        first, second = (-b + root) / (2.0 * a), (-b - root) / (2.0 * a)
    if abs(second) > abs(first):
        first, second = second, first
    return first, second


def ecs_characteristic_roots(inputs: StabilityInputs) -> Tuple[complex, complex]:
    """Roots of (1+6x1) z^2 - (1 + (1-6x2) hbar) z + hbar = 0, larger modulus first"""
    return _quadratic_roots(1.0 + 6.0 * inputs.x1,
                            -(1.0 + (1.0 - 6.0 * inputs.x2) * inputs.hbar),
                            inputs.hbar)


def spectral_radius(roots: Sequence[complex]) -> float:
    return max(abs(root) for root in roots)


def toy_ecs_recurrence(phi_next: float, phi: float, phi_prev: float,
                       inputs: StabilityInputs) -> float:
    """Residual of the flux recurrence obeyed by the staggered toy scheme

    Implicit Dirichlet receiver first, Neumann receiver second, both slabs
    insulated on their external face.
    """
    return ((1.0 + 6.0 * inputs.x1) * phi_next
            - (1.0 - inputs.hbar * (1.0 + 6.0 * inputs.x2)) * phi
            - inputs.hbar * phi_prev)


def toy_ecs_roots(inputs: StabilityInputs) -> Tuple[complex, complex]:
    return _quadratic_roots(1.0 + 6.0 * inputs.x1,
                            -(1.0 - inputs.hbar * (1.0 + 6.0 * inputs.x2)),
                            -inputs.hbar)


def toy_ecs_hbar_limit(dt: float, tau1: float, tau2: float) -> float:
    """Stiffness ratio at which a root of the toy recurrence reaches -1"""
    return (1.0 + 3.0 * dt / tau1) / (1.0 + 3.0 * dt / tau2)


def _toy_gain(inputs: StabilityInputs) -> float:
    return inputs.hbar * (1.0 + 6.0 * inputs.x2) / (1.0 + 6.0 * inputs.x1)


def toy_ics_contraction(inputs: StabilityInputs, omega: float) -> float:
    """Per-iteration error ratio of the relaxed toy fixed point"""
    return abs(1.0 - omega * (1.0 + _toy_gain(inputs)))


def toy_ics_omega_bounds(inputs: StabilityInputs) -> Tuple[float, float]:
    gain = _toy_gain(inputs)
    return 2.0 / (1.0 + gain), 1.0 / (1.0 + gain)


def efficiency_window(dt: float, tau: float) -> bool:
    """tau/100 <= dt <= tau/10"""
    return tau / 100.0 <= dt <= tau / 10.0


def _extrema(values: np.ndarray) -> np.ndarray:
    slope = np.diff(values)
    turning = np.where(slope[:-1] * slope[1:] < 0.0)[0] + 1
    return values[turning]


def envelope_growth(series: Sequence[float], discard_fraction: float = 0.2,
                    extrema: int = 10) -> float:
    """Mean ratio of successive peak-to-peak amplitudes over the last extrema

    Returns 0.0 when the retained samples do not oscillate.
    """
    values = np.asarray(series, dtype=float)
    values = values[int(len(values) * discard_fraction):]
    if values.size < 4:
        return 0.0
    peaks = _extrema(values)[-(extrema + 1):]
    if peaks.size < 3:
        return 0.0
    amplitudes = np.abs(np.diff(peaks))
    if amplitudes[0] == 0.0:
        return math.inf if amplitudes[-1] > 0.0 else 0.0
    return float((amplitudes[-1] / amplitudes[0]) ** (1.0 / (amplitudes.size - 1)))


def reference_energy(mass: float, heat_capacity: float, fusion_temperature: float,
                     initial_temperature: float, fusion_enthalpy: float) -> float:
    """E* = m c (T_fus - T(0)) + dh_fus m; m c T(0) for a body that cannot melt"""
    if fusion_enthalpy == 0.0:
        return mass * heat_capacity * initial_temperature
    return mass * heat_capacity * (fusion_temperature - initial_temperature) + fusion_enthalpy * mass


def ics_energy_bound(tolerance: float, flux: float, dt: float, reference: float) -> float:
    """Largest relative local imbalance a converged implicit step may leave"""
    return tolerance * abs(flux) * dt / reference


@dataclass(frozen=True)
class LedgerEntry:
    step: int
    t: float
    dE_local: float
    dE_cumulative: float
    eps_local: float
    eps_cumulative: float
    bound: Optional[float] = None


@dataclass
class EnergyLedger:
    """Interface energy created per step and cumulatively, relative to E*"""
    reference_energy: float
    entries: List[LedgerEntry] = field(default_factory=list)

    def __post_init__(self):
        if not (math.isfinite(self.reference_energy) and self.reference_energy > 0.0):
            raise FieldValidationError("reference_energy", "must be > 0", self.reference_energy)

    @property
    def local(self) -> List[float]:
        return [e.dE_local for e in self.entries]

    @property
    def cumulative(self) -> float:
        return self.entries[-1].dE_cumulative if self.entries else 0.0

    _sum: float = field(default=0.0, repr=False)
    _compensation: float = field(default=0.0, repr=False)

    def _accumulate(self, value: float) -> float:
        # Neumaier compensated summation
        total = self._sum + value
        if abs(self._sum) >= abs(value):
            self._compensation += (self._sum - total) + value
        else:
            self._compensation += (value - total) + self._sum
        self._sum = total
        return self._sum + self._compensation

    def append(self, step: int, t: float, local: float, bound: Optional[float] = None) -> LedgerEntry:
        cumulative = self._accumulate(local)
        entry = LedgerEntry(step=step, t=t, dE_local=local, dE_cumulative=cumulative,
                            eps_local=local / self.reference_energy,
                            eps_cumulative=cumulative / self.reference_energy, bound=bound)
        self.entries.append(entry)
        return entry

    def peak_relative_global(self) -> float:
        return max((abs(e.eps_cumulative) for e in self.entries), default=0.0)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame([{name: getattr(e, name) for name in LEDGER_COLUMNS} for e in self.entries],
                            columns=LEDGER_COLUMNS)


def energy_update(ledger: EnergyLedger, scheme: Scheme, phi12: float, phi21: float, mdot21: float,
                  fusion_enthalpy: float, dt: float, t: float, step: int,
                  area12: float = 1.0, area21: float = 1.0,
                  tolerance: Optional[float] = None) -> EnergyLedger:
    """Append (phi12 A12 + phi21 A21 - dh_fus mdot21) dt

    Fluxes are outgoing on both sides, so the balance vanishes at a converged
    interface. The explicit scheme passes phi21 and mdot21 as consumed at
    t^n; the implicit one passes the converged values of t^{n+1}.
    """
    local = (phi12 * area12 + phi21 * area21 - fusion_enthalpy * mdot21) * dt
    bound = None
    if Scheme(scheme) is Scheme.ICS and tolerance is not None:
        bound = ics_energy_bound(tolerance, phi12 * area12, dt, ledger.reference_energy)
    ledger.append(step, t, local, bound)
    return ledger
