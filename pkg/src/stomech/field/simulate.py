"""Per-mode phase-space dynamics of the quantized field.

Each coefficient follows dq_i = v_i dt + eps A_i dt, dv_i = -omega_i^2 q_i dt
with its own colored noise A_i; modes are uncoupled, so the acceleration
matrix is diagonal and the run reduces bit-exactly to the single-particle
phase-space process when there is one mode. Mode mass is unity (distinct
from the field mass entering the dispersion), hence eps = sqrt(hbar).
"""

import math

import numpy as np

from ..processes.base import GaussianPositions
from ..processes.phase import LinearAccel, simulate_phase_space_multi
from ..processes.velocity import PhaseDensitySampler, VelocityInitProfile
from .modes import ModeSystem


def ground_mode_samplers(modes: ModeSystem, hbar: float = 1.0,
                         profile: VelocityInitProfile | None = None):
    """One (q, v) sampler per mode: q from the ground-state marginal of its
    oscillator (variance hbar / 2 omega_i), v on the stationary drift -omega_i q."""
    if profile is None:
        profile = VelocityInitProfile("gaussian_about_b", 0.0)
    out = []
    for w in modes.omega:
        w = float(w)
        pos = GaussianPositions(0.0, math.sqrt(hbar / (2.0 * w)))
        out.append(PhaseDensitySampler(pos, lambda q, w=w: -w * q, profile))
    return tuple(out)


def simulate_field_phase_space(modes: ModeSystem, betas, dt: float, T: float,
                               seed: int, n_traj: int, eps: float | None = None,
                               hbar: float = 1.0, samplers=None,
                               rec_stride: int = 1, n_threads: int = 1):
    """Ensemble of mode-coefficient trajectories; fields are (n_rec, n_traj, n)."""
    if eps is None:
        eps = math.sqrt(hbar)
    if samplers is None:
        samplers = ground_mode_samplers(modes, hbar)
    accel = LinearAccel.constant(-np.diag(modes.omega**2))
    return simulate_phase_space_multi(accel, samplers, eps=eps, beta=betas,
                                      dt=dt, T=T, seed=seed, n_traj=n_traj,
                                      rec_stride=rec_stride, n_threads=n_threads)
