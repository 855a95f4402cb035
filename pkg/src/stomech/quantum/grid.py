"""Uniform spatial grids and finite-difference derivatives.

Derivatives are 4th-order centered in the interior. At the ends of a grid or
of a valid-mask segment the stencils switch to one-sided; their weights come
from Fornberg's recursion, so edge rows keep 4th-order accuracy instead of
relying on hand-copied coefficient tables.
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

MIN_SEGMENT = 6  # shortest mask run on which the one-sided stencils fit


@dataclass(frozen=True)
class Grid1D:
    """Periodic-convention grid: x_hi is excluded, spacing (x_hi-x_lo)/n."""

    x_lo: float
    x_hi: float
    n: int

    def __post_init__(self):
        if self.n < 8 or self.x_hi <= self.x_lo:
            raise ValueError("grid needs x_hi > x_lo and n >= 8")

    @property
    def dx(self) -> float:
        return (self.x_hi - self.x_lo) / self.n

    @property
    def x(self) -> np.ndarray:
        return self.x_lo + self.dx * np.arange(self.n)

    @property
    def k(self) -> np.ndarray:
        return 2.0 * np.pi * np.fft.fftfreq(self.n, d=self.dx)

    def integrate(self, f: np.ndarray):
        # rectangle rule; equals the periodic trapezoid rule on this grid
        return np.sum(f) * self.dx


@dataclass(frozen=True)
class Grid2D:
    x_lo: float
    x_hi: float
    n: int

    @property
    def dx(self) -> float:
        return (self.x_hi - self.x_lo) / self.n

    @property
    def x(self) -> np.ndarray:
        return self.x_lo + self.dx * np.arange(self.n)

    @property
    def k(self) -> np.ndarray:
        return 2.0 * np.pi * np.fft.fftfreq(self.n, d=self.dx)

    def mesh(self):
        """(X1, X2) with axis 0 = particle 1, axis 1 = particle 2."""
        return np.meshgrid(self.x, self.x, indexing="ij")

    def integrate(self, f: np.ndarray):
        return np.sum(f) * self.dx * self.dx


def fd_weights(x_nodes: np.ndarray, x0: float, m: int) -> np.ndarray:
    """Fornberg weights for the m-th derivative at x0 from samples at x_nodes."""
    n = len(x_nodes)
    c = np.zeros((n, m + 1))
    c[0, 0] = 1.0
    c1 = 1.0
    c4 = x_nodes[0] - x0
    for i in range(1, n):
        mn = min(i, m)
        c2 = 1.0
        c5 = c4
        c4 = x_nodes[i] - x0
        for j in range(i):
            c3 = x_nodes[i] - x_nodes[j]
            c2 *= c3
            if j == i - 1:
                for k in range(mn, 0, -1):
                    c[i, k] = c1 * (k * c[i - 1, k - 1] - c5 * c[i - 1, k]) / c2
                c[i, 0] = -c1 * c5 * c[i - 1, 0] / c2
            for k in range(mn, 0, -1):
                c[j, k] = (c4 * c[j, k] - k * c[j, k - 1]) / c3
            c[j, 0] = c4 * c[j, 0] / c3
        c1 = c2
    return c[:, m]


@lru_cache(maxsize=None)
def _edge_rows(m: int):
    """One-sided weight rows for points 0 and 1 of a segment (6-node stencil)."""
    nodes = np.arange(6.0)
    return (fd_weights(nodes, 0.0, m), fd_weights(nodes, 1.0, m))


def deriv1(f: np.ndarray, dx: float, axis: int = -1) -> np.ndarray:
    """4th-order first derivative along axis; works on complex arrays."""
    return _deriv(f, dx, axis, 1)


def deriv2(f: np.ndarray, dx: float, axis: int = -1) -> np.ndarray:
    """4th-order second derivative along axis."""
    return _deriv(f, dx, axis, 2)


def _deriv(f, dx, axis, m):
    f = np.moveaxis(np.asarray(f), axis, -1)
    n = f.shape[-1]
    if n < MIN_SEGMENT:
        raise ValueError(f"need at least {MIN_SEGMENT} points along axis")
    out = np.empty_like(f)
    if m == 1:
        out[..., 2:-2] = (
            -f[..., 4:] + 8.0 * f[..., 3:-1] - 8.0 * f[..., 1:-3] + f[..., :-4]
        ) / (12.0 * dx)
    else:
        out[..., 2:-2] = (
            -f[..., 4:]
            + 16.0 * f[..., 3:-1]
            - 30.0 * f[..., 2:-2]
            + 16.0 * f[..., 1:-3]
            - f[..., :-4]
        ) / (12.0 * dx * dx)
    w0, w1 = _edge_rows(m)
    scale = dx**m
    head = f[..., :6]
    tail = f[..., -6:][..., ::-1]
    sign = -1.0 if m == 1 else 1.0
    out[..., 0] = head @ w0 / scale
    out[..., 1] = head @ w1 / scale
    out[..., -1] = sign * (tail @ w0) / scale
    out[..., -2] = sign * (tail @ w1) / scale
    return np.moveaxis(out, -1, axis)


def segments(mask: np.ndarray):
    """Yield slice objects covering each maximal True run of a 1-D mask."""
    mask = np.asarray(mask, dtype=bool)
    padded = np.concatenate(([False], mask, [False]))
    diff = np.diff(padded.astype(np.int8))
    starts = np.flatnonzero(diff == 1)
    stops = np.flatnonzero(diff == -1)
    for lo, hi in zip(starts, stops):
        yield slice(int(lo), int(hi))


def masked_deriv(f: np.ndarray, dx: float, mask: np.ndarray, order: int = 1):
    """Derivative on each mask segment; returns (df, ok) where ok marks points
    whose segment was long enough for the stencils. Values outside ok are 0."""
    df = np.zeros_like(f)
    ok = np.zeros_like(np.asarray(mask), dtype=bool)
    fn = deriv1 if order == 1 else deriv2
    for sl in segments(mask):
        if sl.stop - sl.start >= MIN_SEGMENT:
            df[sl] = fn(f[sl], dx)
            ok[sl] = True
    return df, ok
