"""Histogram-regression conditional expectations.

Per-bin sample means are the estimator of choice here because their variance
accounting is exact: each bin mean is an iid average, so its jackknife
standard error coincides with the classical s/sqrt(n).
"""

from dataclasses import dataclass

import numpy as np

from ..constants import N_MIN
from .density import fd_bin_edges


@dataclass
class BinnedConditional:
    edges: np.ndarray
    centers: np.ndarray
    x_mean: np.ndarray  # per-bin mean of the conditioning variable
    count: np.ndarray
    mean: np.ndarray
    var: np.ndarray
    sem: np.ndarray
    reliable: np.ndarray  # count >= N_MIN

    def interp(self, x: np.ndarray) -> np.ndarray:
        """Evaluate the binned field at positions x by linear interpolation
        between reliable bin centers; returns nan outside their span."""
        c = self.centers[self.reliable]
        m = self.mean[self.reliable]
        if len(c) < 2:
            raise ValueError("fewer than two reliable bins")
        out = np.interp(x, c, m)
        out = np.where((x < c[0]) | (x > c[-1]), np.nan, out)
        return out


def conditional_mean(x: np.ndarray, f: np.ndarray, bins=None) -> BinnedConditional:
    """Per-bin mean of f conditioned on the bin of x.

    bins: edge array, int bin count over the x range, or None for
    Freedman-Diaconis edges. Values of x outside the edges are ignored.
    An empty conditioning range yields empty arrays rather than an error.
    """
    x = np.asarray(x)
    f = np.asarray(f)
    if x.shape != f.shape:
        raise ValueError("x and f must have the same shape")
    if bins is None:
        edges = fd_bin_edges(x)
    elif np.isscalar(bins):
        edges = np.linspace(x.min(), x.max(), int(bins) + 1)
    else:
        edges = np.asarray(bins, dtype=float)
    nb = len(edges) - 1
    if nb < 1 or len(x) == 0:
        z = np.zeros(0)
        return BinnedConditional(edges=edges, centers=z, x_mean=z, count=z.astype(int),
                                 mean=z, var=z, sem=z, reliable=z.astype(bool))
    idx = np.searchsorted(edges, x, side="right") - 1
    idx[x == edges[-1]] = nb - 1  # close the last bin on the right
    ok = (idx >= 0) & (idx < nb)
    idx, fv, xv = idx[ok], f[ok], x[ok]
    count = np.bincount(idx, minlength=nb)
    s1 = np.bincount(idx, weights=fv, minlength=nb)
    s2 = np.bincount(idx, weights=fv * fv, minlength=nb)
    sx = np.bincount(idx, weights=xv, minlength=nb)
    with np.errstate(invalid="ignore", divide="ignore"):
        mean = s1 / count
        x_mean = sx / count
        var = np.maximum(s2 / count - mean * mean, 0.0)
        var *= count / np.maximum(count - 1, 1)  # unbiased
        sem = np.sqrt(var / count)
    centers = 0.5 * (edges[:-1] + edges[1:])
    return BinnedConditional(edges=edges, centers=centers, x_mean=x_mean, count=count,
                             mean=mean, var=var, sem=sem, reliable=count >= N_MIN)
