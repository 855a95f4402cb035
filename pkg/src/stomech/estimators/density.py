"""Density estimation on a grid.

The KDE is computed by binning the samples on the target grid and convolving
with a Gaussian kernel. The extra binning error is O((dx/bandwidth)^2)
relative and the grids used everywhere keep dx well below the bandwidth, so
this is indistinguishable from the exact KDE at Monte Carlo accuracy while
scaling to millions of samples.
"""

import numpy as np
from scipy.ndimage import gaussian_filter1d


def silverman_bandwidth(samples: np.ndarray) -> float:
    """Gaussian-reference rule bandwidth 1.06 sigma n^(-1/5)."""
    s = np.std(samples)
    if s == 0.0:
        return 1e-12
    return 1.06 * s * len(samples) ** (-0.2)


def fd_bin_edges(samples: np.ndarray, lo: float | None = None, hi: float | None = None) -> np.ndarray:
    """Freedman-Diaconis edges over the sample range (or a given range)."""
    samples = np.asarray(samples)
    q75, q25 = np.percentile(samples, [75.0, 25.0])
    iqr = q75 - q25
    if iqr == 0.0:
        return np.histogram_bin_edges(samples, bins="sturges")
    width = 2.0 * iqr * len(samples) ** (-1.0 / 3.0)
    lo = samples.min() if lo is None else lo
    hi = samples.max() if hi is None else hi
    n = max(1, int(np.ceil((hi - lo) / width)))
    return np.linspace(lo, hi, n + 1)


def estimate_density(samples: np.ndarray, grid, bandwidth: float | None = None) -> np.ndarray:
    """Gaussian KDE of the samples on grid.x, normalized to unit mass.

    Samples outside the grid contribute nothing (their mass is lost before
    normalization, which is the desired behavior for stray escapers).
    """
    samples = np.asarray(samples)
    if len(samples) < 1000:
        raise ValueError("need at least 1e3 samples for a density estimate")
    if bandwidth is None:
        bandwidth = silverman_bandwidth(samples)
    if bandwidth <= 0:
        raise ValueError("bandwidth must be positive")
    x = grid.x
    dx = grid.dx
    edges = np.concatenate((x - 0.5 * dx, [x[-1] + 0.5 * dx]))
    counts, _ = np.histogram(samples, bins=edges)
    rho = gaussian_filter1d(counts.astype(float), sigma=bandwidth / dx,
                            mode="constant", truncate=8.0)
    total = rho.sum() * dx
    if total <= 0:
        raise ValueError("all samples fell outside the grid")
    return rho / total
