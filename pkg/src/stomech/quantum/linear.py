"""Exact second-moment flow for linear SDEs dx = B(t) x dt + L dW.

Every linear process in the package (white Nelson drift on a Gaussian state,
the colored first-order smoothing, the phase-space system, single field
modes) has Gaussian statistics fully determined by

    dSigma/dt = B Sigma + Sigma B^T + D,        D = L L^T,
    E[x(t1) x(t2)^T] = Sigma(t1) Phi(t2, t1)^T, dPhi/dt2 = B(t2) Phi.

Fixed-step RK4 keeps the oracle deterministic; step 1e-3 resolves every
coefficient used here far below Monte Carlo error.
"""

import numpy as np


class LinearGaussianFlow:
    def __init__(self, B, D, dt: float = 1e-3):
        """B: callable t -> (d, d) drift matrix, or a constant matrix.
        D: constant diffusion matrix L L^T (not L itself)."""
        if callable(B):
            self._B = B
        else:
            Bc = np.asarray(B, dtype=float)
            self._B = lambda t: Bc
        self.D = np.asarray(D, dtype=float)
        self.dt = dt
        self.dim = self.D.shape[0]

    def _rhs_sigma(self, t, S):
        B = self._B(t)
        return B @ S + S @ B.T + self.D

    def propagate(self, Sigma0: np.ndarray, t0: float, t1: float) -> np.ndarray:
        """Sigma(t1) from Sigma(t0)."""
        S = np.asarray(Sigma0, dtype=float).copy()
        n = max(1, round((t1 - t0) / self.dt))
        h = (t1 - t0) / n
        t = t0
        for _ in range(n):
            k1 = self._rhs_sigma(t, S)
            k2 = self._rhs_sigma(t + 0.5 * h, S + 0.5 * h * k1)
            k3 = self._rhs_sigma(t + 0.5 * h, S + 0.5 * h * k2)
            k4 = self._rhs_sigma(t + h, S + h * k3)
            S = S + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            t += h
        return S

    def transition(self, t1: float, t2: float) -> np.ndarray:
        """Phi(t2, t1) with dPhi/dt2 = B(t2) Phi, Phi(t1, t1) = I."""
        P = np.eye(self.dim)
        n = max(1, round((t2 - t1) / self.dt))
        h = (t2 - t1) / n
        t = t1
        for _ in range(n):
            k1 = self._B(t) @ P
            k2 = self._B(t + 0.5 * h) @ (P + 0.5 * h * k1)
            k3 = self._B(t + 0.5 * h) @ (P + 0.5 * h * k2)
            k4 = self._B(t + h) @ (P + h * k3)
            P = P + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            t += h
        return P

    def two_time(self, Sigma0: np.ndarray, t0: float, t1: float, t2: float) -> np.ndarray:
        """E[x(t1) x(t2)^T] for the zero-mean process, t2 >= t1."""
        if t2 < t1:
            raise ValueError("need t2 >= t1")
        S1 = self.propagate(Sigma0, t0, t1)
        return S1 @ self.transition(t1, t2).T

    def stationary(self, tol: float = 1e-12, t_max: float = 1e3) -> np.ndarray:
        """Fixed point of the covariance flow for constant stable B."""
        S = np.zeros((self.dim, self.dim))
        t, step = 0.0, 1.0
        while t < t_max:
            S_next = self.propagate(S, t, t + step)
            if np.max(np.abs(S_next - S)) < tol:
                return S_next
            S, t = S_next, t + step
        raise RuntimeError("covariance flow did not converge; drift not stable?")
