"""
Shared Test Fixtures
====================

Solver configurations and scenario builders used across the test modules.
"""

from typing import Any, Dict, Optional

import pytest
import yaml

from cosim.config import SCENARIO_DIR, Integration
from cosim.model import BoundarySpec, GeometrySpec, MaterialProps
from cosim.scenario import Scenario, parse_scenario
from cosim.solvers import SolverConfig


def make_config(density: float = 1000.0, heat_capacity: float = 1000.0,
                conductivity: float = 10.0, length: float = 0.1, micro_step: float = 100.0,
                boundary_temperature: float = 3000.0, boundary_exchange: bool = False,
                integration: Integration = Integration.IMPLICIT_EULER,
                fusion_enthalpy: float = 0.0, fusion_temperature: float = 1.0e9,
                residual_power: float = 0.0, area: float = 1.0) -> SolverConfig:
    return SolverConfig(
        micro_step=micro_step,
        integration=integration,
        material=MaterialProps(density=density, heat_capacity=heat_capacity,
                               thermal_conductivity=conductivity,
                               fusion_enthalpy=fusion_enthalpy,
                               fusion_temperature=fusion_temperature,
                               residual_power=residual_power),
        geometry=GeometrySpec(characteristic_length=length, cross_section_area=area),
        boundary=BoundarySpec.constant(boundary_temperature),
        boundary_exchange=boundary_exchange,
    )


def builtin_data(name: str) -> Dict[str, Any]:
    with open(SCENARIO_DIR / f"{name}.yaml", 'r') as f:
        return yaml.safe_load(f)


def toy_scenario_data(tau1: float, tau2: float, hbar: float, dt: float,
                      scheme: str = "ecs_gauss_seidel", t_end: Optional[float] = None,
                      omega: float = 1.0, max_iterations: int = 50,
                      tolerance: float = 1.0e-4) -> Dict[str, Any]:
    """Two insulated 0.1 m slabs of density 1000 with the requested conduction times and stiffness ratio"""
    length, density = 0.1, 1000.0
    conductivity2 = 10.0
    conductivity1 = hbar * conductivity2
    heat_capacity1 = tau1 * conductivity1 / (density * length * length)
    heat_capacity2 = tau2 * conductivity2 / (density * length * length)

    def solver(sid, neighbor, role, heat_capacity, conductivity, boundary):
        return {
            "id": sid,
            "neighbor": neighbor,
            "role": role,
            "integration": "implicit_euler",
            "boundary_exchange": False,
            "material": {"density": density, "heat_capacity": heat_capacity,
                         "thermal_conductivity": conductivity},
            "initial": {"mass": density * length, "temperature": 2000.0, "face_temperature": 2000.0},
            "boundary": {"schedule": [[0.0, boundary]]},
        }

    return {
        "name": "toy",
        "solvers": [
            solver("1", "2", "dirichlet_receiver", heat_capacity1, conductivity1, 3000.0),
            solver("2", "1", "neumann_receiver", heat_capacity2, conductivity2, 400.0),
        ],
        "coupling": {
            "scheme": scheme,
            "macro_step": dt,
            "tolerance": tolerance,
            "max_iterations": max_iterations,
            "relaxation": {"kind": "constant", "omega": omega},
            "order": ["1", "2"],
        },
        "end": {"t_end": t_end if t_end is not None else 60.0 * dt},
    }


def toy_scenario(*args, **kwargs) -> Scenario:
    return parse_scenario(toy_scenario_data(*args, **kwargs))


@pytest.fixture
def heating_config() -> SolverConfig:
    return make_config()


@pytest.fixture
def melting_config() -> SolverConfig:
    return make_config(density=10000.0, heat_capacity=500.0, conductivity=1.25, length=0.05,
                       micro_step=10.0, boundary_temperature=2100.0,
                       fusion_enthalpy=1.5e5, fusion_temperature=2100.0)


@pytest.fixture
def output_dir(tmp_path):
    path = tmp_path / "results"
    path.mkdir()
    return path


@pytest.fixture(autouse=True)
def isolated_settings(monkeypatch, tmp_path):
    """Keep runs away from the developer's environment"""
    monkeypatch.delenv("COSIM_OUTPUT_DIR", raising=False)
    monkeypatch.delenv("COSIM_LOG_LEVEL", raising=False)
    monkeypatch.delenv("COSIM_SHARED_CONFIG", raising=False)
