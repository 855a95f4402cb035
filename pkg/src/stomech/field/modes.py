"""Mode basis of the periodic box and field <-> coefficient maps."""

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True, eq=False)
class ModeSystem:
    """First n members of the real periodic basis on [0, L].

    Basis order: 1/sqrt(L), then (cos, sin) pairs of harmonic j = 1, 2, ...
    with k_j = 2 pi j / L, each normalized to unit L2 norm on the box.
    harmonic[i] is j; trig[i] is 0 for the constant/cosine rows, 1 for sine.
    Frequencies follow the dispersion omega = sqrt(mass^2 + k^2), so they are
    ascending along with k and bounded below by the field mass.
    """

    L: float
    mass: float
    k: np.ndarray
    omega: np.ndarray
    harmonic: np.ndarray
    trig: np.ndarray

    @property
    def n(self) -> int:
        return len(self.k)

    def u(self, x) -> np.ndarray:
        """Basis values, shape (n, len(x))."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        amp = math.sqrt(2.0 / self.L)
        out = np.empty((self.n, len(x)))
        for i in range(self.n):
            if self.harmonic[i] == 0:
                out[i] = 1.0 / math.sqrt(self.L)
            elif self.trig[i] == 0:
                out[i] = amp * np.cos(self.k[i] * x)
            else:
                out[i] = amp * np.sin(self.k[i] * x)
        return out

    def grid(self, n_points: int) -> np.ndarray:
        """Uniform periodic grid: n_points cells, left edges, no duplicate endpoint."""
        return np.arange(n_points) * (self.L / n_points)


def mode_basis(L: float, N: int, m: float) -> ModeSystem:
    """First N modes of the periodic box with dispersion omega = sqrt(m^2 + k^2)."""
    if N < 1:
        raise ValueError("need at least one mode")
    if L <= 0:
        raise ValueError("box length must be positive")
    if m < 0:
        raise ValueError("field mass must be non-negative")
    harmonic = np.array([(i + 1) // 2 for i in range(N)], dtype=int)
    trig = np.array([0 if i == 0 else 1 - i % 2 for i in range(N)], dtype=int)
    k = 2.0 * math.pi * harmonic / L
    omega = np.hypot(m, k)
    return ModeSystem(L=float(L), mass=float(m), k=k, omega=omega,
                      harmonic=harmonic, trig=trig)


@dataclass(frozen=True, eq=False)
class FieldSnapshot:
    """Field and conjugate velocity sampled on a spatial grid."""

    x: np.ndarray
    phi: np.ndarray
    V: np.ndarray


def reconstruct_field(q, v, modes: ModeSystem, x) -> FieldSnapshot:
    """phi = sum_i q_i u_i, V = sum_i v_i u_i, evaluated pointwise on x.

    q, v: (n,) for one configuration or (n_traj, n) for a batch; the output
    arrays carry the matching leading shape.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    U = modes.u(x)
    q = np.asarray(q, dtype=float)
    v = np.asarray(v, dtype=float)
    if q.shape != v.shape or q.shape[-1] != modes.n:
        raise ValueError("q and v must share shape (..., n_modes)")
    return FieldSnapshot(x=x, phi=q @ U, V=v @ U)


def project_field(phi, modes: ModeSystem, x) -> np.ndarray:
    """Coefficients q_i = integral phi u_i dx by the periodic Riemann sum.

    x must be a uniform grid of left cell edges spanning exactly one period
    (as produced by ModeSystem.grid); the uniform sum is then spectrally
    accurate for band-limited integrands.
    """
    x = np.asarray(x, dtype=float)
    dx = np.diff(x)
    if len(x) < 2 or not np.allclose(dx, dx[0], rtol=1e-10, atol=0.0):
        raise ValueError("projection grid must be uniform")
    if abs(len(x) * dx[0] - modes.L) > 1e-9 * modes.L:
        raise ValueError("projection grid must cover exactly one period")
    U = modes.u(x)
    return np.asarray(phi, dtype=float) @ (U.T * dx[0])
