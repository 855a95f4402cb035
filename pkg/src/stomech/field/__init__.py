"""Free scalar field in a periodic box, stochastically quantized mode by mode.

The field is expanded in a real orthonormal basis of the box; each mode
coefficient is an independent harmonic oscillator with frequency
omega_i = sqrt(m^2 + k_i^2), simulated with the colored phase-space process.
Field-level statements (noise locality, the field form of the second law)
are checked by recombining mode statistics through the basis. Spectrum
calculators for the induced gravitational potential are closed-form.
"""

from .modes import FieldSnapshot, ModeSystem, mode_basis, project_field, reconstruct_field
from .noise import NoiseCovarianceResult, noise_covariance_check
from .residual import FieldResidualReport, field_nn_residual
from .simulate import ground_mode_samplers, simulate_field_phase_space
from .spectra import (
    gravitational_spectrum,
    periodogram,
    poisson_solve_periodic,
    potential_spectrum,
    sample_spectrum_field,
)

__all__ = [
    "FieldSnapshot",
    "FieldResidualReport",
    "ModeSystem",
    "NoiseCovarianceResult",
    "field_nn_residual",
    "gravitational_spectrum",
    "ground_mode_samplers",
    "mode_basis",
    "noise_covariance_check",
    "periodogram",
    "poisson_solve_periodic",
    "potential_spectrum",
    "project_field",
    "reconstruct_field",
    "sample_spectrum_field",
    "simulate_field_phase_space",
]
