"""The colored noise A_beta: an Ornstein-Uhlenbeck process.

    dA = -beta A dt + beta dW

Stationary law N(0, beta/2), autocovariance (beta/2) exp(-beta |t-t'|),
correlation time 1/beta. In the beta -> infinity limit, eps A dt -> eps dW in
law, which is why it smooths a white-noise diffusion.

The default update is the exact conditional one,

    A_{k+1} = e^{-beta dt} A_k + N(0, (beta/2)(1 - e^{-2 beta dt})),

which is stable at any dt*beta; Euler-Maruyama stays available behind
method="euler" for cross-checks and is subject to the resolution rule.
"""

import math

import numpy as np

from .integrate import IntegratorConfig
from .streams import NoiseStream


def ou_exact_step_factors(beta: float, dt: float) -> tuple[float, float]:
    """(decay, noise_std) for the exact conditional OU update."""
    decay = math.exp(-beta * dt)
    noise_std = math.sqrt(0.5 * beta * (1.0 - decay * decay))
    return decay, noise_std


def ou_stationary_sample(beta: float, stream: NoiseStream, n: int = 1) -> np.ndarray:
    """Draws from the stationary law N(0, beta/2)."""
    return math.sqrt(0.5 * beta) * stream.normals(n)


def simulate_ou(beta: float, a0: float, cfg: IntegratorConfig, stream: NoiseStream,
                method: str = "exact") -> np.ndarray:
    """Path of A including a0 (length n_steps + 1)."""
    if beta <= 0:
        raise ValueError("beta must be positive")
    cfg.check_beta(beta)
    n = cfg.n_steps
    a = np.empty(n + 1)
    a[0] = a0
    if method == "exact":
        decay, noise_std = ou_exact_step_factors(beta, cfg.dt)
        z = stream.normals(n)
        for k in range(n):
            a[k + 1] = decay * a[k] + noise_std * z[k]
    elif method == "euler":
        dw = stream.wiener_increments(n, cfg.dt)
        for k in range(n):
            a[k + 1] = a[k] - beta * a[k] * cfg.dt + beta * dw[k]
    else:
        raise ValueError(f"unknown OU method {method!r}")
    return a


def stationary_variance(beta: float) -> float:
    return 0.5 * beta


def autocovariance(beta: float, tau) -> np.ndarray:
    """Stationary autocovariance (beta/2) exp(-beta |tau|)."""
    return 0.5 * beta * np.exp(-beta * np.abs(np.asarray(tau, dtype=float)))
