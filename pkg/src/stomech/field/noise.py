"""Locality check for the reconstructed noise field.

The driving noise enters the field equation as eps sum_i u_i(x) A_i(t); with
independent unit-variance mode noises its equal-time covariance is the
truncated completeness sum eps^2 sum_{i<=N} u_i(x) u_i(x'), which tends to a
delta as modes are added. A_i is scaled by sqrt(2 / beta_i) here (the OU
stationary variance is beta/2) so the comparison kernel is parameter-free.
"""

from dataclasses import dataclass

import numpy as np

from .modes import ModeSystem


@dataclass(frozen=True, eq=False)
class NoiseCovarianceResult:
    probes: np.ndarray
    cov: np.ndarray        # empirical equal-time covariance at probe pairs
    cov_se: np.ndarray
    kernel: np.ndarray     # analytic truncated kernel at the same pairs
    mean: np.ndarray       # noise-field mean per probe (should vanish)
    mean_se: np.ndarray
    n_traj: int
    n_frames: int

    def off_diagonal_ratio(self, i: int = 0, j: int = 1) -> tuple[float, float]:
        """|C_ij| / sqrt(C_ii C_jj) and its propagated standard error."""
        den = np.sqrt(self.cov[i, i] * self.cov[j, j])
        r = abs(self.cov[i, j]) / den
        se = self.cov_se[i, j] / den
        return float(r), float(se)


def noise_covariance_check(ens, modes: ModeSystem, probes,
                           eps: float = 1.0) -> NoiseCovarianceResult:
    """Empirical covariance of the reconstructed noise field at probe points.

    Consecutive recorded frames of one trajectory are correlated over the
    noise correlation time, so errors are clustered: the per-trajectory
    time-averaged product is the independent unit.
    """
    probes = np.atleast_1d(np.asarray(probes, dtype=float))
    ok = ens.ok()
    A = ens.fields["a"]
    if A.ndim == 2:  # single-mode ensembles drop the mode axis
        A = A[:, :, None]
    A = A[:, ok, :]
    beta = np.asarray(ens.meta["beta"], dtype=float)
    if A.shape[2] != modes.n or len(beta) != modes.n:
        raise ValueError("ensemble mode count does not match the basis")
    U = modes.u(probes)                                   # (n, P)
    scaled = A * np.sqrt(2.0 / beta)[None, None, :]
    noise = eps * np.einsum("rjm,mp->rjp", scaled, U)     # (n_rec, n_traj, P)
    n_rec, n_traj, _ = noise.shape

    per_traj = np.einsum("rjp,rjq->jpq", noise, noise) / n_rec
    cov = per_traj.mean(axis=0)
    cov_se = per_traj.std(axis=0, ddof=1) / np.sqrt(n_traj)
    m_traj = noise.mean(axis=0)
    mean = m_traj.mean(axis=0)
    mean_se = m_traj.std(axis=0, ddof=1) / np.sqrt(n_traj)
    kernel = eps**2 * (U.T @ U)
    return NoiseCovarianceResult(probes=probes, cov=cov, cov_se=cov_se,
                                 kernel=kernel, mean=mean, mean_se=mean_se,
                                 n_traj=n_traj, n_frames=n_rec)
