"""Nonparametric estimation from trajectory ensembles."""

from .density import estimate_density, fd_bin_edges, silverman_bandwidth
from .conditional import BinnedConditional, conditional_mean
from .jackknife import grouped_jackknife
from .derivatives import (
    DerivativeField,
    acceleration_from_velocity,
    estimate_forward_derivative,
    estimate_backward_derivative,
    stochastic_acceleration,
    newton_nelson_residual,
)

__all__ = [
    "estimate_density",
    "fd_bin_edges",
    "silverman_bandwidth",
    "BinnedConditional",
    "conditional_mean",
    "grouped_jackknife",
    "DerivativeField",
    "acceleration_from_velocity",
    "estimate_forward_derivative",
    "estimate_backward_derivative",
    "stochastic_acceleration",
    "newton_nelson_residual",
]
