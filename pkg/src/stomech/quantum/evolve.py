"""Grid-based Schrödinger evolution, the independent oracle for every
nonstationary comparison.

Strang-split spectral stepping on a periodic grid: half a potential phase,
a full kinetic phase in Fourier space, half a potential phase. Each factor
is a diagonal unitary, so the norm is conserved to roundoff; accuracy in the
state itself is O(dt^2) and is what the step-size check guards.
"""

from dataclasses import dataclass, replace

import numpy as np

from .grid import Grid1D, Grid2D

NORM_DRIFT_LIMIT = 1e-6  # per unit time; larger means the step size is wrong


@dataclass
class WavefunctionState:
    grid: "Grid1D | Grid2D"
    psi: np.ndarray
    m: float
    hbar: float
    t: float

    @property
    def rho(self) -> np.ndarray:
        return np.abs(self.psi) ** 2

    def norm(self) -> float:
        return float(np.sqrt(self.grid.integrate(self.rho).real))

    def normalized(self) -> "WavefunctionState":
        return replace(self, psi=self.psi / self.norm())

    def fidelity(self, other: "WavefunctionState") -> float:
        overlap = self.grid.integrate(np.conj(self.psi) * other.psi)
        return float(np.abs(overlap))

    def moments(self):
        """(mean, variance) of the position density; 1-D states only."""
        x = self.grid.x
        rho = self.rho
        w = rho / rho.sum()
        mean = float(np.sum(w * x))
        return mean, float(np.sum(w * (x - mean) ** 2))

    def cov(self) -> np.ndarray:
        """2x2 position covariance of a two-particle state."""
        X1, X2 = self.grid.mesh()
        rho = self.rho
        w = rho / rho.sum()
        m1 = float(np.sum(w * X1))
        m2 = float(np.sum(w * X2))
        d1, d2 = X1 - m1, X2 - m2
        return np.array([
            [np.sum(w * d1 * d1), np.sum(w * d1 * d2)],
            [np.sum(w * d1 * d2), np.sum(w * d2 * d2)],
        ])

    def marginal(self, axis: int = 0):
        """Normalized 1-D marginal density of a two-particle state."""
        rho = self.rho
        other = 1 - axis
        marg = rho.sum(axis=other) * self.grid.dx
        return self.grid.x, marg


def ho_potential(grid, omega: float = 1.0, m: float = 1.0) -> np.ndarray:
    if isinstance(grid, Grid2D):
        X1, X2 = grid.mesh()
        return 0.5 * m * omega * omega * (X1 * X1 + X2 * X2)
    x = grid.x
    return 0.5 * m * omega * omega * x * x


def _kinetic_phase(state: WavefunctionState, dt: float) -> np.ndarray:
    g = state.grid
    if isinstance(g, Grid2D):
        k = g.k
        k2 = k[:, None] ** 2 + k[None, :] ** 2
    else:
        k2 = g.k**2
    return np.exp(-0.5j * state.hbar * k2 * dt / state.m)


def schrodinger_evolve(state: WavefunctionState, U: np.ndarray, dt: float, T: float,
                       record_every: int | None = None) -> list[WavefunctionState]:
    """Evolve under iħ ∂ψ/∂t = (-ħ²/2m ∇² + U) ψ for duration T.

    Returns recorded states (the initial one, then every `record_every`
    steps; the final time is always included). T must be a whole number of
    steps. Raises if the norm drifts faster than the step-size limit.
    """
    n_steps = round(T / dt)
    if abs(n_steps * dt - T) > 1e-9 * max(1.0, T):
        raise ValueError("T must be an integer number of steps")
    if record_every is None:
        record_every = max(1, n_steps // 64)
    U = np.asarray(U)
    if U.shape != state.psi.shape:
        raise ValueError("potential grid does not match the state grid")
    half_v = np.exp(-0.5j * U * dt / state.hbar)
    kin = _kinetic_phase(state, dt)
    fft, ifft = (np.fft.fft2, np.fft.ifft2) if state.psi.ndim == 2 else (np.fft.fft, np.fft.ifft)

    psi = state.psi.astype(complex)
    norm0 = state.norm()
    out = [replace(state, psi=psi.copy())]
    for k in range(n_steps):
        psi = half_v * psi
        psi = ifft(kin * fft(psi))
        psi = half_v * psi
        if (k + 1) % record_every == 0 or k + 1 == n_steps:
            out.append(replace(state, psi=psi.copy(), t=state.t + (k + 1) * dt))
    norm1 = out[-1].norm()
    if abs(norm1 - norm0) > NORM_DRIFT_LIMIT * max(T, dt):
        raise RuntimeError(
            f"norm drifted by {abs(norm1 - norm0):.2e} over T={T}: step-size error"
        )
    return out
