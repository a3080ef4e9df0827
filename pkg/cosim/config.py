"""
Co-simulation Configuration
===========================

Run settings taken from the environment and the shared YAML configuration.
Physics never comes from here: scenario files hold all of it.
"""

import logging
import os
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Dict

import yaml

REPO_ROOT = Path(__file__).resolve().parent.parent
SCENARIO_DIR = REPO_ROOT / "config" / "scenarios"
DEFAULT_SHARED_CONFIG = REPO_ROOT / "config" / "shared" / "shared_config.yaml"

LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'


class Scheme(str, Enum):
    ECS_GAUSS_SEIDEL = "ecs_gauss_seidel"
    ECS_JACOBI = "ecs_jacobi"
    ICS = "ics"


class Integration(str, Enum):
    IMPLICIT_EULER = "implicit_euler"
    EXPLICIT_EULER = "explicit_euler"


class InterfaceRole(str, Enum):
    DIRICHLET_RECEIVER = "dirichlet_receiver"
    NEUMANN_RECEIVER = "neumann_receiver"


class RelaxationKind(str, Enum):
    CONSTANT = "constant"
    SECANT = "secant"
    AITKEN = "aitken"


class SweepParameter(str, Enum):
    DT = "dt"
    OMEGA = "omega"
    HBAR = "hbar"


@dataclass
class HarnessDefaults:
    """Defaults applied when a scenario leaves a harness knob unset"""
    stationarity_threshold: float = 1.0e-4
    stationarity_window: int = 10
    sweep_workers: int = 1


@dataclass
class RunSettings:
    """Settings of one CLI invocation"""
    output_dir: Path = Path("results")
    log_level: str = "INFO"
    log_format: str = LOG_FORMAT
    shared_config_path: Path = DEFAULT_SHARED_CONFIG
    harness: HarnessDefaults = field(default_factory=HarnessDefaults)

    @classmethod
    def from_env(cls) -> 'RunSettings':
        """Load settings from environment variables and the shared YAML file"""
        shared_path = Path(os.getenv("COSIM_SHARED_CONFIG", str(DEFAULT_SHARED_CONFIG)))
        shared = load_shared_config(shared_path)

        logging_section = shared.get("logging", {})
        harness_section = shared.get("harness", {})

        return cls(
            output_dir=Path(os.getenv("COSIM_OUTPUT_DIR", harness_section.get("output_dir", "results"))),
            log_level=os.getenv("COSIM_LOG_LEVEL", logging_section.get("level", "INFO")).upper(),
            log_format=logging_section.get("format", LOG_FORMAT),
            shared_config_path=shared_path,
            harness=HarnessDefaults(
                stationarity_threshold=float(harness_section.get("stationarity_threshold", 1.0e-4)),
                stationarity_window=int(harness_section.get("stationarity_window", 10)),
                sweep_workers=int(harness_section.get("sweep_workers", 1)),
            ),
        )

    def configure_logging(self, verbose: bool = False) -> None:
        level = logging.DEBUG if verbose else getattr(logging, self.log_level, logging.INFO)
        logging.basicConfig(level=level, format=self.log_format)


def load_shared_config(path: Path) -> Dict[str, Any]:
    """Read the shared YAML configuration; a missing file means no overrides"""
    if not path.exists():
        return {}
    with open(path, 'r') as f:
        return yaml.safe_load(f) or {}
