"""Phase-space process: dx = v dt + eps A dt, dv = a(x) dt, dA = -beta A dt + beta dW.

Position noise enters only through the colored velocity term, so x paths are
differentiable and stochastic derivatives can be estimated from them. The
multi-particle variant couples particles through a linear acceleration
matrix and supports switching that matrix at a fixed step (interactions
turned off at a chosen time).
"""

import math
from dataclasses import dataclass

import numpy as np

from ..sde import kernels
from ..sde.ensemble import run_ensemble
from ..sde.integrate import check_beta
from ..sde.ou import ou_exact_step_factors
from .base import chunk_noise
from .velocity import PhaseDensitySampler


@dataclass(frozen=True)
class AccelTable:
    """Static acceleration a(x) sampled on a uniform grid."""

    tab: np.ndarray
    x_lo: float
    dx: float


@dataclass(frozen=True)
class LinearAccel:
    """a(x) = F x with F = f_pre before switch_step and f_post after."""

    f_pre: np.ndarray
    f_post: np.ndarray
    switch_step: int = 0

    @staticmethod
    def constant(F) -> "LinearAccel":
        F = np.atleast_2d(np.asarray(F, dtype=float))
        return LinearAccel(f_pre=F, f_post=F, switch_step=0)


class PhaseSpaceBuilder:
    """Single particle; acceleration from a table or a 1x1 linear matrix."""

    kind = "phase_space"
    record_fields = ("x", "v", "a")
    n_particles = 1
    n_components = 1
    n_init = 3  # x0, v0, A0 draws in that order

    def __init__(self, accel, sampler: PhaseDensitySampler, eps: float, beta: float,
                 dt: float, n_steps: int, rec_stride: int = 1):
        if beta <= 0:
            raise ValueError("beta must be positive")
        check_beta(beta, dt)
        self.accel = accel
        self.sampler = sampler
        self.eps = eps
        self.beta = beta
        self.dt = dt
        self.n_steps = n_steps
        self.rec_stride = rec_stride
        self.decay, self.noise_std = ou_exact_step_factors(beta, dt)
        self.meta = {"eps": eps, "beta": beta, "accel": type(accel).__name__}

    def init_chunk(self, ids, seed):
        init, z = chunk_noise(ids, seed, 1, self.n_init, self.n_steps)
        x0, v0 = self.sampler.draw(init[:, 0, 0], init[:, 0, 1])
        a0 = math.sqrt(self.beta / 2.0) * init[:, 0, 2]
        return {"x": x0, "v": v0, "a": a0}, z[:, :, 0]

    def run_chunk(self, state0, z, outs, esc):
        if isinstance(self.accel, AccelTable):
            tab = np.ascontiguousarray(self.accel.tab[None, :])
            kernels.phase_table(state0["x"], state0["v"], state0["a"], tab,
                                self.accel.x_lo, self.accel.dx, self.eps, self.dt,
                                self.decay, self.noise_std, z, self.rec_stride,
                                outs["x"], outs["v"], outs["a"], esc)
        elif isinstance(self.accel, LinearAccel):
            # trailing singleton views are C-contiguous, so the p-particle
            # kernel runs the p = 1 case in place
            kernels.phase_linear(state0["x"][:, None], state0["v"][:, None],
                                 state0["a"][:, None], self.accel.f_pre,
                                 self.accel.f_post, self.accel.switch_step,
                                 np.array([self.eps]), self.dt, np.array([self.decay]),
                                 np.array([self.noise_std]), z[:, :, None],
                                 self.rec_stride, outs["x"][:, :, None],
                                 outs["v"][:, :, None], outs["a"][:, :, None])
        else:
            raise TypeError(f"unsupported acceleration {type(self.accel).__name__}")


@dataclass(frozen=True)
class CorrelatedPhaseSampler:
    """Joint (x, v) initializer: x ~ N(mean, chol chol^T), v = B0 x + s z.

    Used where particles start correlated (an entangled initial state) while
    their driving noises stay independent. spread = 0 pins v to the drift.
    """

    mean: np.ndarray
    chol: np.ndarray
    b0: np.ndarray
    spread: float = 0.0

    def draw_joint(self, z_x: np.ndarray, z_v: np.ndarray):
        x = self.mean[None, :] + z_x @ self.chol.T
        v = x @ self.b0.T + self.spread * z_v
        return x, v


class PhaseSpaceMultiBuilder:
    """p particles with linear coupling; component c of trajectory j draws
    from stream j * p + c, so particle streams are independent and a
    single-particle run is replayed exactly by the p = 1 case."""

    kind = "phase_space_multi"
    record_fields = ("x", "v", "a")
    n_init = 3

    def __init__(self, accel: LinearAccel, samplers, eps, beta, dt: float,
                 n_steps: int, rec_stride: int = 1):
        p = accel.f_pre.shape[0]
        if accel.f_pre.shape != (p, p) or accel.f_post.shape != (p, p):
            raise ValueError("acceleration matrices must be square and equal-sized")
        if not hasattr(samplers, "draw_joint") and len(samplers) != p:
            raise ValueError("need one (x, v) sampler per particle")
        self.eps = np.broadcast_to(np.asarray(eps, dtype=float), (p,)).copy()
        self.beta = np.broadcast_to(np.asarray(beta, dtype=float), (p,)).copy()
        if np.any(self.beta <= 0):
            raise ValueError("beta must be positive")
        for b in self.beta:
            check_beta(float(b), dt)
        self.accel = accel
        self.samplers = samplers
        self.dt = dt
        self.n_steps = n_steps
        self.rec_stride = rec_stride
        self.n_particles = p
        self.n_components = p
        fac = [ou_exact_step_factors(float(b), dt) for b in self.beta]
        self.decay = np.array([f[0] for f in fac])
        self.noise_std = np.array([f[1] for f in fac])
        self.meta = {"eps": self.eps.tolist(), "beta": self.beta.tolist(),
                     "switch_step": accel.switch_step}

    def init_chunk(self, ids, seed):
        p = self.n_particles
        init, z = chunk_noise(ids, seed, p, self.n_init, self.n_steps)
        n = len(ids)
        a0 = np.sqrt(self.beta / 2.0)[None, :] * init[:, :, 2]
        if hasattr(self.samplers, "draw_joint"):
            x0, v0 = self.samplers.draw_joint(init[:, :, 0], init[:, :, 1])
            return {"x": x0, "v": v0, "a": a0}, z
        x0 = np.empty((n, p))
        v0 = np.empty((n, p))
        for c, sampler in enumerate(self.samplers):
            x0[:, c], v0[:, c] = sampler.draw(init[:, c, 0], init[:, c, 1])
        return {"x": x0, "v": v0, "a": a0}, z

    def run_chunk(self, state0, z, outs, esc):
        def as3(arr):
            return arr[:, :, None] if arr.ndim == 2 else arr

        def st2(arr):
            return arr[:, None] if arr.ndim == 1 else arr

        kernels.phase_linear(st2(state0["x"]), st2(state0["v"]), st2(state0["a"]),
                             self.accel.f_pre, self.accel.f_post,
                             self.accel.switch_step, self.eps, self.dt, self.decay,
                             self.noise_std, as3(z), self.rec_stride,
                             as3(outs["x"]), as3(outs["v"]), as3(outs["a"]))


def _steps(T, dt):
    n_steps = round(T / dt)
    if abs(n_steps * dt - T) > 1e-9 * max(1.0, T):
        raise ValueError("T must be an integer number of steps")
    return n_steps


def simulate_phase_space(accel, sampler, eps: float, beta: float, dt: float, T: float,
                         seed: int, n_traj: int, rec_stride: int = 1, n_threads: int = 1):
    """accel: AccelTable for arbitrary a(x), or LinearAccel (1x1) for a = f x."""
    b = PhaseSpaceBuilder(accel, sampler, eps, beta, dt, _steps(T, dt), rec_stride)
    return run_ensemble(b, n_traj, seed, n_threads=n_threads)


def simulate_phase_space_multi(accel: LinearAccel, samplers, eps, beta, dt: float,
                               T: float, seed: int, n_traj: int, rec_stride: int = 1,
                               n_threads: int = 1):
    b = PhaseSpaceMultiBuilder(accel, samplers, eps, beta, dt, _steps(T, dt), rec_stride)
    return run_ensemble(b, n_traj, seed, n_threads=n_threads)
