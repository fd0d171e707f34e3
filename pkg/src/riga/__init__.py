"""Iterative Lyapunov-based synthesis of control pulses for quantum gates.

The package simulates closed quantum systems on the unitary group and builds
open-loop pulses by repeatedly tracking a reference trajectory with a
Lyapunov feedback, re-using the applied input as the next reference.
"""

from riga.driver import RigaConfig, RunReport, StepRecord, resimulate, run_grape, run_riga
from riga.errors import (
    CayleyBlowup,
    ConfigError,
    NoReachableGoal,
    NonConvergence,
    RankDeficient,
    RigaError,
    SeedOutOfBounds,
    SingularAtMinusOne,
)
from riga.integrators import PulseSet, TimeGrid, Trajectory
from riga.problem import GateSpec, ShapingConfig, SystemModel, infidelity
from riga.seed import SeedConfig, generate_seed

__version__ = "0.1.0"

__all__ = [
    "RigaConfig",
    "RunReport",
    "StepRecord",
    "run_riga",
    "run_grape",
    "resimulate",
    "PulseSet",
    "TimeGrid",
    "Trajectory",
    "GateSpec",
    "ShapingConfig",
    "SystemModel",
    "infidelity",
    "SeedConfig",
    "generate_seed",
    "RigaError",
    "SingularAtMinusOne",
    "RankDeficient",
    "CayleyBlowup",
    "SeedOutOfBounds",
    "NoReachableGoal",
    "NonConvergence",
    "ConfigError",
]
