"""Closed-form reference states: density, phase action, and forward drift
at any time without PDE solving.

Every state exposes rho(x, t), S(x, t), drift(x, t) and psi(x, t) plus the
low-order moments where a closed form exists. Phases carry an arbitrary
additive (possibly time-dependent) constant; densities, drifts and
correlators are gauge-independent and are what the oracles actually compare.
"""

import numpy as np

from .evolve import WavefunctionState
from .grid import Grid1D
from .madelung import DriftField, MadelungPair, madelung_split, nelson_drift


class FreeGaussian:
    """Spreading free packet. sigma0 is the initial standard deviation of rho."""

    def __init__(self, sigma0: float = 1.0, x0: float = 0.0, p0: float = 0.0,
                 m: float = 1.0, hbar: float = 1.0):
        if sigma0 <= 0:
            raise ValueError("sigma0 must be positive")
        self.sigma0 = sigma0
        self.x0 = x0
        self.p0 = p0
        self.m = m
        self.hbar = hbar
        self.theta = hbar / (2.0 * m * sigma0 * sigma0)

    kind = "free_gaussian"

    def mean(self, t):
        return self.x0 + self.p0 * t / self.m

    def var(self, t):
        return self.sigma0**2 * (1.0 + (self.theta * t) ** 2)

    def rho(self, x, t):
        v = self.var(t)
        return np.exp(-((x - self.mean(t)) ** 2) / (2.0 * v)) / np.sqrt(2.0 * np.pi * v)

    def drift(self, x, t):
        th, d = self.theta, np.asarray(x) - self.mean(t)
        return self.p0 / self.m + d * (th * th * t - th) / (1.0 + (th * t) ** 2)

    def S(self, x, t):
        th, d = self.theta, np.asarray(x) - self.mean(t)
        return self.p0 * x + 0.5 * self.m * d * d * th * th * t / (1.0 + (th * t) ** 2)

    def drift_linear(self, t):
        """(c0, c1) with b(x, t) = c0(t) + c1(t) x."""
        th = self.theta
        c1 = (th * th * t - th) / (1.0 + (th * t) ** 2)
        return self.p0 / self.m - self.mean(t) * c1, c1

    def psi(self, x, t):
        return np.sqrt(self.rho(x, t)) * np.exp(1j * self.S(x, t) / self.hbar)

    def grid_for(self, T: float, n: int = 2048) -> Grid1D:
        half = abs(self.x0) + abs(self.p0) * T / self.m + 8.0 * np.sqrt(self.var(T))
        return Grid1D(-half, half, n)


class HOGround:
    """Harmonic-oscillator ground state; stationary, b(x) = -omega x."""

    def __init__(self, omega: float = 1.0, m: float = 1.0, hbar: float = 1.0):
        self.omega = omega
        self.m = m
        self.hbar = hbar

    kind = "ho_ground"

    def mean(self, t):
        return 0.0

    def var(self, t):
        return self.hbar / (2.0 * self.m * self.omega)

    def rho(self, x, t):
        v = self.var(t)
        return np.exp(-np.asarray(x) ** 2 / (2.0 * v)) / np.sqrt(2.0 * np.pi * v)

    def drift(self, x, t):
        return -self.omega * np.asarray(x)

    def drift_linear(self, t):
        t = np.asarray(t, dtype=float)
        return np.zeros_like(t), np.full_like(t, -self.omega)

    def S(self, x, t):
        return np.zeros_like(np.asarray(x, dtype=float))

    def psi(self, x, t):
        return np.sqrt(self.rho(x, t)).astype(complex)

    def grid_for(self, T: float, n: int = 2048) -> Grid1D:
        half = 8.0 * np.sqrt(self.var(0.0))
        return Grid1D(-half, half, n)


class HOCoherent:
    """Coherent state: rigid Gaussian oscillating at the classical frequency."""

    def __init__(self, xbar0: float = 1.0, omega: float = 1.0, m: float = 1.0,
                 hbar: float = 1.0):
        self.xbar0 = xbar0
        self.omega = omega
        self.m = m
        self.hbar = hbar

    kind = "ho_coherent"

    def mean(self, t):
        return self.xbar0 * np.cos(self.omega * t)

    def var(self, t):
        return self.hbar / (2.0 * self.m * self.omega)

    def rho(self, x, t):
        v = self.var(t)
        return np.exp(-((np.asarray(x) - self.mean(t)) ** 2) / (2.0 * v)) / np.sqrt(2.0 * np.pi * v)

    def current_velocity(self, t):
        return -self.omega * self.xbar0 * np.sin(self.omega * t)

    def drift(self, x, t):
        return self.current_velocity(t) - self.omega * (np.asarray(x) - self.mean(t))

    def drift_linear(self, t):
        t = np.asarray(t, dtype=float)
        c0 = self.current_velocity(t) + self.omega * self.mean(t)
        return c0, np.full_like(t, -self.omega)

    def S(self, x, t):
        return self.m * self.current_velocity(t) * np.asarray(x)

    def psi(self, x, t):
        return np.sqrt(self.rho(x, t)) * np.exp(1j * self.S(x, t) / self.hbar)

    def grid_for(self, T: float, n: int = 2048) -> Grid1D:
        half = abs(self.xbar0) + 8.0 * np.sqrt(self.var(0.0))
        return Grid1D(-half, half, n)


class HOSuperposition01:
    """c0|0> + c1|1> superposition; rho breathes and has an exact node at
    x = -c0/(sqrt(2) c1 cos(omega t)) * sqrt(hbar/m omega) whenever
    omega t is a multiple of pi (real relative phase)."""

    def __init__(self, c0: float = np.sqrt(0.5), c1: float = np.sqrt(0.5),
                 omega: float = 1.0, m: float = 1.0, hbar: float = 1.0):
        norm = np.hypot(c0, c1)
        if norm == 0:
            raise ValueError("coefficients must not both vanish")
        self.c0 = c0 / norm
        self.c1 = c1 / norm
        self.omega = omega
        self.m = m
        self.hbar = hbar
        self.kappa = np.sqrt(m * omega / hbar)

    kind = "ho_superposition_01"

    def _u(self, x, t):
        xi = self.kappa * np.asarray(x)
        return self.c0 + np.sqrt(2.0) * self.c1 * xi * np.exp(-1j * self.omega * t)

    def psi(self, x, t):
        xi = self.kappa * np.asarray(x)
        n0 = np.sqrt(self.kappa / np.sqrt(np.pi))
        return n0 * np.exp(-0.5 * xi * xi) * self._u(x, t) * np.exp(-0.5j * self.omega * t)

    def rho(self, x, t):
        xi = self.kappa * np.asarray(x)
        return (self.kappa / np.sqrt(np.pi)) * np.exp(-xi * xi) * np.abs(self._u(x, t)) ** 2

    def drift(self, x, t):
        ratio = np.sqrt(2.0) * self.c1 * self.kappa * np.exp(-1j * self.omega * t) / self._u(x, t)
        dlogpsi = ratio - (self.m * self.omega / self.hbar) * np.asarray(x)
        return (self.hbar / self.m) * (dlogpsi.real + dlogpsi.imag)

    def S(self, x, t):
        return self.hbar * np.unwrap(np.angle(self.psi(x, t)))

    def mean(self, t):
        amp = np.sqrt(self.hbar / (2.0 * self.m * self.omega))
        return 2.0 * self.c0 * self.c1 * amp * np.cos(self.omega * t)

    def var(self, t):
        x2 = (self.hbar / (2.0 * self.m * self.omega)) * (1.0 + 2.0 * self.c1**2)
        return x2 - self.mean(t) ** 2

    def grid_for(self, T: float, n: int = 2048) -> Grid1D:
        half = 9.0 / self.kappa
        return Grid1D(-half, half, n)


class TwoParticleGaussian:
    """Two identical uncoupled oscillators in an entangled real Gaussian state
    psi(0) ~ exp(-x^T K x / (2 hbar)) with K = [[a, -c], [-c, a]], |c| < a.

    The quadratic form stays Gaussian under the uncoupled HO evolution; its
    complex matrix M(t) follows a Riccati flow solved per eigenvalue of K, so
    density, drift field and all equal-time and two-time second moments come
    out in closed form. The forward drift is linear, b(x, t) = B(t) x.
    """

    def __init__(self, a: float = 1.0, c: float = 0.6, omega: float = 1.0,
                 m: float = 1.0, hbar: float = 1.0):
        if abs(c) >= a:
            raise ValueError("need |c| < a for a normalizable state")
        self.a = a
        self.c = c
        self.omega = omega
        self.m = m
        self.hbar = hbar
        self.K = np.array([[a, -c], [-c, a]])
        # eigenbasis of K: (1,1)/sqrt2 and (1,-1)/sqrt2
        self._evecs = np.array([[1.0, 1.0], [1.0, -1.0]]) / np.sqrt(2.0)
        self._evals = np.array([a - c, a + c])

    kind = "two_particle_gaussian"

    def M(self, t: float) -> np.ndarray:
        """Complex quadratic-form matrix at time t (M(0) = K)."""
        aw = self.m * self.omega
        r0 = (self._evals - aw) / (self._evals + aw)
        r = r0 * np.exp(-2j * self.omega * t)
        mu = aw * (1.0 + r) / (1.0 - r)
        return (self._evecs * mu) @ self._evecs.T

    def drift_matrix(self, t: float) -> np.ndarray:
        """B(t) with forward drift b(x, t) = B(t) x."""
        M = self.M(t)
        return -(M.real + M.imag) / self.m

    def drift(self, xvec: np.ndarray, t: float) -> np.ndarray:
        return xvec @ self.drift_matrix(t).T

    def cov_xx(self, t: float) -> np.ndarray:
        return 0.5 * self.hbar * np.linalg.inv(self.M(t).real)

    def cov_xp(self, t: float) -> np.ndarray:
        """Symmetrized <x_i p_j> at time t (zero at t = 0 for the real state)."""
        aw = self.m * self.omega
        sx = 0.5 * self.hbar * np.linalg.inv(self.K)
        sp = 0.5 * self.hbar * self.K
        cs = np.cos(self.omega * t) * np.sin(self.omega * t)
        return cs * (sp / aw - aw * sx)

    def two_time_xx(self, t1: float, t2: float) -> np.ndarray:
        """E[x_i(t1) x_j(t2)] for the Heisenberg position operators."""
        d = self.omega * (t2 - t1)
        aw = self.m * self.omega
        return np.cos(d) * self.cov_xx(t1) + np.sin(d) * self.cov_xp(t1) / aw

    def rho(self, X1, X2, t: float):
        P = self.M(t).real / self.hbar  # |psi|^2 ~ exp(-x^T P x)
        det = P[0, 0] * P[1, 1] - P[0, 1] * P[1, 0]
        q = P[0, 0] * X1 * X1 + 2.0 * P[0, 1] * X1 * X2 + P[1, 1] * X2 * X2
        return np.sqrt(det) / np.pi * np.exp(-q)

    def psi(self, X1, X2, t: float):
        M = self.M(t)
        q = M[0, 0] * X1 * X1 + 2.0 * M[0, 1] * X1 * X2 + M[1, 1] * X2 * X2
        det = M.real[0, 0] * M.real[1, 1] - M.real[0, 1] * M.real[1, 0]
        amp = (np.sqrt(det) / (np.pi * self.hbar**2)) ** 0.5 * np.sqrt(self.hbar)
        return amp * np.exp(-q / (2.0 * self.hbar))

    def grid_for(self, T: float, n: int = 256):
        from .grid import Grid2D

        sig = np.sqrt(np.max(np.diag(self.cov_xx(0.0))) / (1.0 - abs(self.c) / self.a))
        half = 8.0 * sig
        return Grid2D(-half, half, n)


CATALOG = {
    "free_gaussian": FreeGaussian,
    "ho_ground": HOGround,
    "ho_coherent": HOCoherent,
    "ho_superposition_01": HOSuperposition01,
    "two_particle_gaussian": TwoParticleGaussian,
}


def make_state(name: str, **params):
    if name not in CATALOG:
        raise ValueError(f"unknown catalog state {name!r}; known: {sorted(CATALOG)}")
    return CATALOG[name](**params)


def analytic_state(name: str, params: dict | None = None, t: float = 0.0,
                   grid: Grid1D | None = None):
    """Catalog lookup returning (WavefunctionState, MadelungPair, DriftField).

    Two-particle states are excluded here (their fields are matrices, not
    1-D grids); use make_state and the state's own methods for those.
    """
    state = make_state(name, **(params or {}))
    if name == "two_particle_gaussian":
        raise ValueError("two_particle_gaussian has no 1-D grid form; use make_state")
    g = grid if grid is not None else state.grid_for(max(t, 1.0))
    psi = state.psi(g.x, t)
    ws = WavefunctionState(grid=g, psi=psi, m=state.m, hbar=state.hbar, t=t)
    pair = madelung_split(psi, g.x, g.dx, hbar=state.hbar, m=state.m)
    drift = DriftField(x=g.x, dx=g.dx, b=np.asarray(state.drift(g.x, t), dtype=float),
                       mask=pair.mask)
    return ws, pair, drift
