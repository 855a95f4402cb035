"""Field form of the second law, checked mode by mode.

Projecting (1/2)(D+D- + D-D+) phi = (Laplacian - m^2) phi onto mode i gives
the oscillator law accel_i = -omega_i^2 q_i, so each mode reuses the particle
machinery. Field runs are phase-space runs with a recorded mode velocity, so
the acceleration comes from v-increments (position compositions on smooth
paths measure flow transport, not force). Modes are independent, so their
residuals combine in quadrature through the basis: r(x)^2 = sum_i N_i^2
u_i(x)^2, and with orthonormal modes the box L2 norm of r is sqrt(sum N_i^2),
which for a single mode reduces to the particle residual norm itself.
"""

from dataclasses import dataclass

import numpy as np

from ..estimators.derivatives import acceleration_from_velocity, newton_nelson_residual
from ..sde.ensemble import TrajectoryEnsemble
from .modes import ModeSystem


@dataclass(frozen=True, eq=False)
class FieldResidualReport:
    mode_norms: np.ndarray
    mode_pooled_se: np.ndarray
    probes: np.ndarray
    residual_at_probes: np.ndarray
    norm: float
    pooled_se: float

    def to_dict(self):
        return {"mode_norms": self.mode_norms.tolist(),
                "mode_pooled_se": self.mode_pooled_se.tolist(),
                "norm": self.norm, "pooled_se": self.pooled_se}


def mode_view(ens, i: int) -> TrajectoryEnsemble:
    """Single-mode slice of a multi-mode ensemble, estimator-compatible."""
    fields = {name: arr[:, :, i] if arr.ndim == 3 else arr
              for name, arr in ens.fields.items()}
    return TrajectoryEnsemble(times=ens.times, fields=fields, escaped=ens.escaped,
                              dt=ens.dt, seed=ens.seed,
                              kind=f"{ens.kind}[mode {i}]", meta=dict(ens.meta))


def _mode_count(ens) -> int:
    arr = ens.fields["x"]
    return arr.shape[2] if arr.ndim == 3 else 1


def field_nn_residual(ens, modes: ModeSystem, probes, t, delta,
                      bins=None) -> FieldResidualReport:
    """t and delta may be scalars or per-mode arrays: each mode's noise has
    its own correlation time, so estimation windows scale with it."""
    probes = np.atleast_1d(np.asarray(probes, dtype=float))
    if _mode_count(ens) != modes.n:
        raise ValueError("ensemble mode count does not match the basis")
    t = np.broadcast_to(np.asarray(t, dtype=float), (modes.n,))
    delta = np.broadcast_to(np.asarray(delta, dtype=float), (modes.n,))
    norms = np.empty(modes.n)
    pooled = np.empty(modes.n)
    for i in range(modes.n):
        acc = acceleration_from_velocity(mode_view(ens, i), float(t[i]),
                                         float(delta[i]), bins)
        w2 = float(modes.omega[i]) ** 2
        res = newton_nelson_residual(acc, lambda q, w2=w2: w2 * q, m=1.0)
        norms[i] = res.norm
        pooled[i] = res.pooled_se
    U = modes.u(probes)
    r_probe = np.sqrt((norms[:, None] ** 2 * U**2).sum(axis=0))
    return FieldResidualReport(mode_norms=norms, mode_pooled_se=pooled,
                               probes=probes, residual_at_probes=r_probe,
                               norm=float(np.sqrt((norms**2).sum())),
                               pooled_se=float(np.sqrt((pooled**2).sum())))
