"""Colored-noise smoothing of a Nelson process: dx = b dt + eps A dt.

The noise A is a stationary Ornstein-Uhlenbeck process, updated with its
exact transition so dt only has to resolve the drift, and initialized from
N(0, beta/2) independent of x. As beta grows the x-marginals converge to the
white-noise process driven by the same drift.
"""

import math

from ..sde import kernels
from ..sde.ensemble import run_ensemble
from ..sde.integrate import check_beta
from ..sde.ou import ou_exact_step_factors
from .base import LinearDrift, TableDrift, chunk_noise


class ColoredSmoothingBuilder:
    kind = "colored_smoothing"
    record_fields = ("x", "a")
    n_particles = 1
    n_components = 1
    n_init = 2  # x0 draw, then stationary A0 draw

    def __init__(self, drift, positions, eps: float, beta: float, dt: float,
                 n_steps: int, rec_stride: int = 1):
        if beta <= 0:
            raise ValueError("beta must be positive")
        check_beta(beta, dt)
        self.drift = drift
        self.positions = positions
        self.eps = eps
        self.beta = beta
        self.dt = dt
        self.n_steps = n_steps
        self.rec_stride = rec_stride
        self.decay, self.noise_std = ou_exact_step_factors(beta, dt)
        self.meta = {"eps": eps, "beta": beta, "drift": type(drift).__name__}

    def init_chunk(self, ids, seed):
        init, z = chunk_noise(ids, seed, self.n_components, self.n_init, self.n_steps)
        x0 = self.positions.draw(init[:, 0, 0])
        a0 = math.sqrt(self.beta / 2.0) * init[:, 0, 1]
        return {"x": x0, "a": a0}, z[:, :, 0]

    def run_chunk(self, state0, z, outs, esc):
        d = self.drift
        if isinstance(d, LinearDrift):
            kernels.colored_linear(state0["x"], state0["a"], d.c0, d.c1, self.eps,
                                   self.dt, self.decay, self.noise_std, z,
                                   self.rec_stride, outs["x"], outs["a"])
        elif isinstance(d, TableDrift):
            kernels.colored_table(state0["x"], state0["a"], d.tab, d.x_lo, d.dx,
                                  d.slice_stride, self.eps, self.dt, self.decay,
                                  self.noise_std, z, self.rec_stride,
                                  outs["x"], outs["a"], esc)
        else:
            raise TypeError(f"unsupported drift description {type(d).__name__}")


def simulate_colored_smoothing(drift, positions, eps: float, beta: float, dt: float,
                               T: float, seed: int, n_traj: int, rec_stride: int = 1,
                               n_threads: int = 1):
    n_steps = round(T / dt)
    if abs(n_steps * dt - T) > 1e-9 * max(1.0, T):
        raise ValueError("T must be an integer number of steps")
    b = ColoredSmoothingBuilder(drift, positions, eps, beta, dt, n_steps, rec_stride)
    return run_ensemble(b, n_traj, seed, n_threads=n_threads)


def integrated_ou_variance(beta: float, eps: float, T: float) -> float:
    """Closed form for Var x(T) when b = 0: x integrates eps * A.

    From the stationary autocovariance (beta/2) exp(-beta |u|):
    Var = eps^2 (T - (1 - exp(-beta T)) / beta).
    """
    return eps * eps * (T - (1.0 - math.exp(-beta * T)) / beta)
