"""Distances between densities and weighted fits over estimated fields.

The conjectures under test say a process density stays "close" to the quantum
one without naming a norm, so every comparison here reports more than one
metric and always an error bar alongside.
"""

import math

import numpy as np

MASS_TOL = 1e-3


def _check_density(rho, dx, name):
    rho = np.asarray(rho, dtype=float)
    mass = float(rho.sum() * dx)
    if abs(mass - 1.0) > MASS_TOL:
        raise ValueError(f"{name} is not normalized: mass {mass:.6f}")
    return rho


def marginal_distance(rho_a, rho_b, dx: float, metric: str = "l1") -> float:
    """L1 or 1-Wasserstein distance between normalized densities on a shared grid.

    W1 is the integral of the absolute CDF difference, which on a common grid
    is exact for piecewise-constant densities.
    """
    a = _check_density(rho_a, dx, "rho_a")
    b = _check_density(rho_b, dx, "rho_b")
    if a.shape != b.shape:
        raise ValueError("densities must share a grid")
    if metric == "l1":
        return float(np.abs(a - b).sum() * dx)
    if metric == "w1":
        return float(np.abs(np.cumsum(a - b) * dx).sum() * dx)
    raise ValueError(f"unknown metric {metric!r}; expected 'l1' or 'w1'")


def slope_through_origin(field) -> tuple[float, float]:
    """Weighted least-squares slope of an odd field through the origin.

    Regresses the per-bin estimate on the per-bin mean of the conditioning
    variable (not the bin center, whose offset attenuates the slope), with
    inverse-variance weights over reliable bins.
    """
    r = field.reliable
    if not np.any(r):
        raise ValueError("no reliable bins for a slope fit")
    x = field.x_mean[r]
    y = field.estimate[r]
    w = 1.0 / field.stderr[r] ** 2
    sxx = float(np.sum(w * x * x))
    return float(np.sum(w * x * y) / sxx), math.sqrt(1.0 / sxx)


def field_mismatch(field, target) -> tuple[float, float]:
    """Density-weighted L2 distance between an estimated field and a target.

    field: DerivativeField or BinnedConditional (anything with x_mean, count,
    reliable and an estimate/stderr or mean/sem pair). target: callable
    evaluated at the per-bin x means. Weights are bin occupancies over
    reliable bins; returns (norm, pooled standard error).
    """
    est = getattr(field, "estimate", None)
    err = getattr(field, "stderr", None)
    if est is None:
        est, err = field.mean, field.sem
    r = field.reliable
    if not np.any(r):
        raise ValueError("no reliable bins for a mismatch norm")
    w = np.where(r, field.count, 0.0).astype(float)
    w /= w.sum()
    diff = np.where(r, est - target(field.x_mean), 0.0)
    norm = float(np.sqrt(np.sum(w * diff * diff)))
    pooled = float(np.sqrt(np.sum(w * np.where(r, err, 0.0) ** 2)))
    return norm, pooled
