"""Forward/backward stochastic derivatives and the Newton-Nelson residual.

The forward derivative at lag delta is the binned conditional mean of
(x(t+delta) - x(t)) / delta given x(t); the backward one uses the preceding
increment. The symmetric second derivative composes the two: the binned
D+x (or D-x) field is frozen at time t, evaluated along each trajectory at
the two ends of the opposite-direction lag, differenced, and binned again;
the two composition orders are averaged. Freezing the field at t rather
than re-fitting it at t-delta keeps the estimator a functional of the state
at t alone, which is what the conditional-expectation definitions ask for.

Lag bias is O(delta) and unavoidable (the limit cannot be taken below the
discretization scale), so residual reports carry the lag and callers compare
two lags to expose it.
"""

from dataclasses import dataclass, field

import numpy as np

from ..constants import N_MIN
from .conditional import BinnedConditional, conditional_mean
from .density import fd_bin_edges
from .jackknife import grouped_jackknife


@dataclass
class DerivativeField:
    centers: np.ndarray
    x_mean: np.ndarray  # per-bin mean of the conditioning variable
    estimate: np.ndarray
    stderr: np.ndarray
    count: np.ndarray
    reliable: np.ndarray
    delta: float
    t: float
    kind: str
    extras: dict = field(default_factory=dict)


@dataclass
class ResidualField:
    centers: np.ndarray
    residual: np.ndarray
    stderr: np.ndarray
    weight: np.ndarray
    reliable: np.ndarray
    norm: float
    pooled_se: float


def _frames(ens, times):
    ok = ens.ok()
    return [np.asarray(ens.at(t))[ok] for t in times]


def _check_delta(ens, delta):
    if delta < ens.dt - 1e-12:
        raise ValueError("lag delta must be at least the integrator step dt")


def estimate_forward_derivative(ens, t: float, delta: float, bins=None) -> DerivativeField:
    """Binned E[(x(t+delta) - x(t)) / delta | x(t)]."""
    _check_delta(ens, delta)
    x0, x1 = _frames(ens, (t, t + delta))
    bc = conditional_mean(x0, (x1 - x0) / delta, bins)
    return DerivativeField(centers=bc.centers, x_mean=bc.x_mean, estimate=bc.mean,
                           stderr=bc.sem, count=bc.count, reliable=bc.reliable,
                           delta=delta, t=t, kind="forward")


def estimate_backward_derivative(ens, t: float, delta: float, bins=None,
                                 burn_in: float = 0.0) -> DerivativeField:
    """Binned E[(x(t) - x(t-delta)) / delta | x(t)]."""
    _check_delta(ens, delta)
    if t - delta < burn_in - 1e-12:
        raise ValueError("t - delta reaches below the burn-in end")
    xm, x0 = _frames(ens, (t - delta, t))
    bc = conditional_mean(x0, (x0 - xm) / delta, bins)
    return DerivativeField(centers=bc.centers, x_mean=bc.x_mean, estimate=bc.mean,
                           stderr=bc.sem, count=bc.count, reliable=bc.reliable,
                           delta=delta, t=t, kind="backward")


def acceleration_from_velocity(ens, t: float, delta: float, bins=None) -> DerivativeField:
    """Binned E[(v(t+delta) - v(t-delta)) / 2delta | x(t)] for phase-space runs.

    When the process carries its own momentum variable, the force content of
    the stochastic acceleration lives in the velocity increments. Composing
    position-difference fields instead measures transport of the velocity
    field along the flow (the chain rule turns E[dx/dt|x] = b into b db/dx,
    which flips the sign of a linear force), so for ensembles that record v
    this is the estimator that probes the law rather than the flow.
    """
    _check_delta(ens, delta)
    if t - delta < ens.times[0] - 1e-12 or t + delta > ens.times[-1] + 1e-12:
        raise ValueError("insufficient horizon: need t +- delta recorded")
    ok = ens.ok()
    x0 = np.asarray(ens.at(t))[ok]
    vp = np.asarray(ens.at(t + delta, "v"))[ok]
    vm = np.asarray(ens.at(t - delta, "v"))[ok]
    bc = conditional_mean(x0, (vp - vm) / (2.0 * delta), bins)
    return DerivativeField(centers=bc.centers, x_mean=bc.x_mean, estimate=bc.mean,
                           stderr=bc.sem, count=bc.count, reliable=bc.reliable,
                           delta=delta, t=t, kind="acceleration_v")


def _binned_means(x, values, edges):
    """Per-bin means with nan for unreliable or empty bins."""
    good = np.isfinite(values)
    bc = conditional_mean(x[good], values[good], edges)
    out = np.where(bc.reliable, bc.mean, np.nan)
    return out, bc


def stochastic_acceleration(ens, t: float, delta: float, bins=None,
                            n_groups: int = 20) -> DerivativeField:
    """Symmetric second derivative 0.5 (D+ D- + D- D+) x at time t.

    Standard errors come from a delete-one-group jackknife over trajectories
    so the reuse of the ensemble in the field fit is priced in.
    """
    _check_delta(ens, delta)
    t0, t1 = ens.times[0], ens.times[-1]
    if t - 2.0 * delta < t0 - 1e-12 or t + 2.0 * delta > t1 + 1e-12:
        raise ValueError("insufficient horizon: need t +- 2 delta recorded")
    xm, x0, xp = _frames(ens, (t - delta, t, t + delta))
    if bins is None:
        edges = fd_bin_edges(x0)
    elif np.isscalar(bins):
        edges = np.linspace(x0.min(), x0.max(), int(bins) + 1)
    else:
        edges = np.asarray(bins, dtype=float)

    def compositions(mask):
        xm_, x0_, xp_ = xm[mask], x0[mask], xp[mask]
        g_plus = conditional_mean(x0_, (xp_ - x0_) / delta, edges)
        g_minus = conditional_mean(x0_, (x0_ - xm_) / delta, edges)
        # D- applied to the frozen D+x field, then the mirror image
        c1 = (g_plus.interp(x0_) - g_plus.interp(xm_)) / delta
        c2 = (g_minus.interp(xp_) - g_minus.interp(x0_)) / delta
        return x0_, c1, c2

    def statistic(mask):
        x0_, c1, c2 = compositions(mask)
        both, _ = _binned_means(x0_, 0.5 * (c1 + c2), edges)
        return both

    theta, se = grouped_jackknife(len(x0), statistic, n_groups=n_groups)
    x0_, c1, c2 = compositions(np.ones(len(x0), dtype=bool))
    m1, bc1 = _binned_means(x0_, c1, edges)
    m2, _ = _binned_means(x0_, c2, edges)
    count = bc1.count
    reliable = np.isfinite(theta) & np.isfinite(se) & (count >= N_MIN)
    centers = 0.5 * (edges[:-1] + edges[1:])
    return DerivativeField(centers=centers, x_mean=bc1.x_mean, estimate=theta,
                           stderr=se, count=count, reliable=reliable, delta=delta,
                           t=t, kind="acceleration",
                           extras={"comp_backward_of_forward": m1,
                                   "comp_forward_of_backward": m2})


def newton_nelson_residual(accel: DerivativeField, grad_U, m: float = 1.0) -> ResidualField:
    """residual(x) = accel(x) + (1/m) U'(x); density-weighted L2 norm.

    grad_U: callable returning U'(x) at the bin centers. Weights are the
    ensemble bin occupancies over reliable bins, so empty tails cannot
    dominate the norm.
    """
    rel = accel.reliable
    r = np.where(rel, accel.estimate + np.asarray(grad_U(accel.centers)) / m, np.nan)
    w = np.where(rel, accel.count, 0.0).astype(float)
    total = w.sum()
    if total == 0:
        raise ValueError("no reliable bins to form a residual norm")
    w /= total
    norm = float(np.sqrt(np.nansum(w * r * r)))
    pooled = float(np.sqrt(np.nansum(w * accel.stderr**2)))
    return ResidualField(centers=accel.centers, residual=r, stderr=accel.stderr,
                         weight=w, reliable=rel, norm=norm, pooled_se=pooled)
