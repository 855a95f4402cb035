"""Spectra of the noise-sourced gravitational potential.

The potential inherits a flat space-time spectrum eps^2 t / xi^2 from the
accumulated mode noise; transferring it through the Poisson equation gives
the matter power spectrum P(k, t) = |k|^4 / (4 pi G)^2 * (eps^2 / xi^2) * t.
Both directions of that transfer are provided, plus a brute-force pipeline
(sample a field with a given spectrum, solve the discrete Poisson equation
spectrally, measure the result) used to validate the transfer numerically.

Defaults pick units with 4 pi G = 1.
"""

import math

import numpy as np

_G_UNIT = 1.0 / (4.0 * math.pi)


def gravitational_spectrum(k, t: float, eps: float = 1.0, xi: float = 1.0,
                           G: float = _G_UNIT):
    """Matter power spectrum |k|^4 / (4 pi G)^2 * (eps^2 / xi^2) * t."""
    if xi == 0.0:
        raise ValueError("xi must be nonzero")
    if G <= 0.0:
        raise ValueError("G must be positive")
    if t < 0.0:
        raise ValueError("t must be non-negative")
    k = np.asarray(k, dtype=float)
    out = np.abs(k) ** 4 / (4.0 * math.pi * G) ** 2 * (eps**2 / xi**2) * t
    return out if out.ndim else float(out)


def potential_spectrum(p_matter, k, G: float = _G_UNIT):
    """Poisson transfer P_theta(k) = (4 pi G)^2 / |k|^4 * P_matter(k)."""
    if G <= 0.0:
        raise ValueError("G must be positive")
    k = np.asarray(k, dtype=float)
    if np.any(k == 0.0):
        raise ValueError("k = 0: the zero mode of the Poisson equation is undefined")
    p = p_matter(k) if callable(p_matter) else np.asarray(p_matter, dtype=float)
    out = (4.0 * math.pi * G) ** 2 / np.abs(k) ** 4 * p
    return out if out.ndim else float(out)


def _wavenumbers(n: int, L: float) -> np.ndarray:
    return 2.0 * math.pi * np.arange(n // 2 + 1) / L


def sample_spectrum_field(power, L: float, n: int, seed: int) -> np.ndarray:
    """Mean-free real field on an n-point periodic grid with E[periodogram] = power(k)."""
    if n < 2 or n % 2:
        raise ValueError("grid size must be even and at least 2")
    rng = np.random.default_rng(seed)
    k = _wavenumbers(n, L)
    p = np.asarray(power(k) if callable(power) else power, dtype=float)
    if p.shape != k.shape or np.any(p < 0):
        raise ValueError("power must be non-negative and match the rfft wavenumbers")
    spec = np.zeros(n // 2 + 1, dtype=complex)
    g = rng.standard_normal((n // 2 + 1, 2))
    spec[1:-1] = np.sqrt(L * p[1:-1] / 2.0) * (g[1:-1, 0] + 1j * g[1:-1, 1])
    spec[-1] = math.sqrt(L * p[-1]) * g[-1, 0]  # Nyquist bin is real
    return np.fft.irfft(spec, n) * (n / L)


def periodogram(values, L: float):
    """(k, |FFT * dx|^2 / L) over the non-negative wavenumbers."""
    values = np.asarray(values, dtype=float)
    n = values.shape[-1]
    spec = np.fft.rfft(values) * (L / n)
    return _wavenumbers(n, L), np.abs(spec) ** 2 / L


def poisson_solve_periodic(source, L: float, G: float = _G_UNIT) -> np.ndarray:
    """Solve the 3-point discrete Poisson equation lap theta = 4 pi G source.

    The stencil is diagonal in the Fourier basis with eigenvalues
    -(2 - 2 cos(k h)) / h^2; the zero mode of the source must vanish (tested
    against round-off) and the solution is returned mean-free.
    """
    if G <= 0.0:
        raise ValueError("G must be positive")
    source = np.asarray(source, dtype=float)
    n = source.shape[-1]
    h = L / n
    spec = np.fft.rfft(source)
    if abs(spec[0]) > 1e-9 * max(1.0, np.abs(spec).max()):
        raise ValueError("source has a nonzero mean: Poisson zero mode undefined")
    lam = -(2.0 - 2.0 * np.cos(_wavenumbers(n, L) * h)) / h**2
    lam[0] = 1.0  # zero mode excluded; numerator is zero there
    theta = spec / lam
    theta[0] = 0.0
    return np.fft.irfft(4.0 * math.pi * G * theta, n)
