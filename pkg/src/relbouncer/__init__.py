"""Relativistic particle under constant force and linear drag, classical and quantum."""

from .core import (
    A_of_v,
    K_exact,
    K_first_order,
    K_nonrel,
    K_series,
    ModelParams,
    PhaseState,
    Regime,
    acceleration,
    gamma,
    regime,
)
from .errors import ConvergenceError, DomainError, GridMismatchError, LightConeError, SingularityError
from .quantum import (
    EigenSolution,
    VelocityGrid,
    WavePacket,
    evolve,
    find_spectrum,
    phi_E,
    project,
    quantization_residual,
    theta,
    to_position,
    to_velocity,
)
from .trajectories import IntegratorConfig, Trajectory, conservation_report, integrate

__all__ = [
    "A_of_v", "K_exact", "K_first_order", "K_nonrel", "K_series", "ModelParams", "PhaseState",
    "Regime", "acceleration", "gamma", "regime",
    "ConvergenceError", "DomainError", "GridMismatchError", "LightConeError", "SingularityError",
    "EigenSolution", "VelocityGrid", "WavePacket", "evolve", "find_spectrum", "phi_E", "project",
    "quantization_residual", "theta", "to_position", "to_velocity",
    "IntegratorConfig", "Trajectory", "conservation_report", "integrate",
]
