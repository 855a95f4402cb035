"""Process families: white Nelson diffusion, colored smoothing, phase space."""

from .base import (
    GaussianPositions,
    GridPositions,
    LinearDrift,
    TableDrift,
    chunk_noise,
    drift_schedule,
    drift_table,
)
from .velocity import VelocityInitProfile, construct_initial_phase_density
from .nelson import simulate_nelson
from .colored import simulate_colored_smoothing
from .phase import simulate_phase_space, simulate_phase_space_multi

__all__ = [
    "GaussianPositions",
    "GridPositions",
    "LinearDrift",
    "TableDrift",
    "chunk_noise",
    "drift_schedule",
    "drift_table",
    "VelocityInitProfile",
    "construct_initial_phase_density",
    "simulate_nelson",
    "simulate_colored_smoothing",
    "simulate_phase_space",
    "simulate_phase_space_multi",
]
