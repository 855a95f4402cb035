"""Shared plumbing for process builders: initial-position samplers, drift
descriptions, and the pinned per-trajectory noise layout.

Draw order contract (it fixes bitwise reproducibility): trajectory j owns
streams (seed, j * n_components + c). From each component stream the first
n_init normals initialize state, the remaining n_steps normals drive the
path. Changing this order is a breaking change to every recorded run.
"""

from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

from ..sde.streams import NoiseStream


def chunk_noise(ids: np.ndarray, seed: int, n_components: int, n_init: int, n_steps: int):
    """Pregenerate draws for a chunk of trajectories.

    Returns (init, z): init has shape (n, n_components, n_init), z has shape
    (n, n_steps, n_components). Component streams are consumed one at a time,
    init draws first, so a single-trajectory run replays identically inside
    any ensemble.
    """
    n = len(ids)
    init = np.empty((n, n_components, n_init))
    z = np.empty((n, n_steps, n_components))
    for row, j in enumerate(ids):
        for c in range(n_components):
            stream = NoiseStream(seed, int(j) * n_components + c)
            draws = stream.normals(n_init + n_steps)
            init[row, c] = draws[:n_init]
            z[row, :, c] = draws[n_init:]
    return init, z


class GaussianPositions:
    """x0 = mean + std * z."""

    def __init__(self, mean: float, std: float):
        if std < 0:
            raise ValueError("std must be non-negative")
        self.mean = mean
        self.std = std

    def draw(self, z: np.ndarray) -> np.ndarray:
        return self.mean + self.std * z


class GridPositions:
    """Inverse-CDF sampling of a density sampled on a uniform grid.

    The standard normal z is mapped through its own CDF to a uniform, so the
    draw stays a deterministic function of the stream's normals.
    """

    def __init__(self, x: np.ndarray, rho: np.ndarray):
        rho = np.maximum(np.asarray(rho, dtype=float), 0.0)
        if rho.sum() == 0:
            raise ValueError("density is identically zero")
        cdf = np.cumsum(rho)
        cdf = cdf / cdf[-1]
        # midpoint convention: cdf[i] is the mass up to the right edge of cell i
        self._edges = np.concatenate(([0.0], cdf))
        dx = x[1] - x[0]
        self._xe = np.concatenate((x - 0.5 * dx, [x[-1] + 0.5 * dx]))

    def draw(self, z: np.ndarray) -> np.ndarray:
        return np.interp(ndtr(z), self._edges, self._xe)


@dataclass(frozen=True)
class LinearDrift:
    """b(x, t_k) = c0[k] + c1[k] x, one entry per integrator step."""

    c0: np.ndarray
    c1: np.ndarray


@dataclass(frozen=True)
class TableDrift:
    """b sampled on a grid, one row per time slice of slice_stride steps."""

    tab: np.ndarray
    x_lo: float
    dx: float
    slice_stride: int


def drift_schedule(state, dt: float, n_steps: int) -> LinearDrift:
    """Per-step linear drift coefficients for a closed-form Gaussian state."""
    t = dt * np.arange(n_steps)
    c0, c1 = state.drift_linear(t)
    return LinearDrift(c0=np.broadcast_to(c0, t.shape).astype(float).copy(),
                       c1=np.broadcast_to(c1, t.shape).astype(float).copy())


def drift_table(state, grid, dt: float, n_steps: int, n_slices: int = 64) -> TableDrift:
    """Sample a state's closed-form drift on a grid at n_slices times.

    Slice s covers steps [s * stride, (s+1) * stride); the drift is evaluated
    at the slice start time, consistent with the Euler left endpoint.
    """
    stride = max(1, n_steps // n_slices)
    n_slices = (n_steps + stride - 1) // stride
    tab = np.empty((n_slices, grid.n))
    for s in range(n_slices):
        tab[s] = state.drift(grid.x, s * stride * dt)
    return TableDrift(tab=tab, x_lo=float(grid.x[0]), dx=grid.dx, slice_stride=stride)
