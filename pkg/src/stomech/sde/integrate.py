"""Ito Euler-Maruyama integration for a single trajectory.

The ensemble drivers in `ensemble.py` are the fast path; this module is the
reference implementation the ensembles must agree with (n=1 composition).
"""

import math
from dataclasses import dataclass

import numpy as np

from ..constants import DT_BETA_MAX
from .streams import NoiseStream


def check_beta(beta: float, dt: float) -> None:
    # correlation time 1/beta must be resolved by several steps
    if dt * beta > DT_BETA_MAX + 1e-12:
        raise ValueError(
            f"under-resolved colored noise: dt*beta = {dt * beta:.3g} "
            f"exceeds {DT_BETA_MAX}"
        )


@dataclass(frozen=True)
class IntegratorConfig:
    """Fixed-step Ito Euler-Maruyama configuration."""

    dt: float
    n_steps: int

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.n_steps < 1:
            raise ValueError("n_steps must be >= 1")

    def check_beta(self, beta: float) -> None:
        check_beta(beta, self.dt)

    @property
    def times(self) -> np.ndarray:
        return self.dt * np.arange(self.n_steps + 1)


def euler_maruyama(drift, diffusion_const: float, x0: float, cfg: IntegratorConfig,
                   stream: NoiseStream) -> np.ndarray:
    """x_{k+1} = x_k + drift(x_k, t_k) dt + diffusion_const dW_k.

    Returns the full path including x0 (length n_steps + 1). A non-finite
    drift evaluation aborts with an error rather than silently keeping the
    trajectory; callers that clamp near nodes do so inside `drift`.
    """
    if diffusion_const < 0:
        raise ValueError("diffusion_const must be >= 0")
    # scale the raw normals exactly as the ensemble kernels do, so an n=1
    # ensemble replays this path bit for bit
    sq = diffusion_const * math.sqrt(cfg.dt)
    z = stream.normals(cfg.n_steps)
    x = np.empty(cfg.n_steps + 1)
    x[0] = x0
    t = 0.0
    for k in range(cfg.n_steps):
        b = drift(x[k], t)
        if not np.isfinite(b):
            raise FloatingPointError(f"non-finite drift at step {k}, x={x[k]!r}")
        x[k + 1] = x[k] + b * cfg.dt + sq * z[k]
        t += cfg.dt
    return x
