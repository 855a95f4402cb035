"""Quantum ground truth: analytic state catalog, Madelung fields, PDE oracle."""

from .grid import Grid1D, Grid2D, deriv1, deriv2, masked_deriv, segments
from .catalog import CATALOG, analytic_state, make_state
from .madelung import (
    MadelungPair,
    DriftField,
    madelung_split,
    nelson_drift,
    quantum_potential,
    drift_from_psi,
    valid_mask,
)
from .evolve import WavefunctionState, schrodinger_evolve, ho_potential
from .linear import LinearGaussianFlow

__all__ = [
    "Grid1D",
    "Grid2D",
    "deriv1",
    "deriv2",
    "masked_deriv",
    "segments",
    "CATALOG",
    "analytic_state",
    "make_state",
    "MadelungPair",
    "DriftField",
    "madelung_split",
    "nelson_drift",
    "quantum_potential",
    "drift_from_psi",
    "valid_mask",
    "WavefunctionState",
    "schrodinger_evolve",
    "ho_potential",
    "LinearGaussianFlow",
]
