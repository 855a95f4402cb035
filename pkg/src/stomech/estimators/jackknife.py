"""Grouped jackknife for estimators that reuse the ensemble internally.

Plain bin means have closed-form standard errors, but composed estimators
(a field is fitted, then differenced along the same trajectories) correlate
the field with the quotients. Delete-one-group recomputation captures that
at the cost of n_groups re-evaluations.
"""

import numpy as np


def grouped_jackknife(n_items: int, statistic, n_groups: int = 20):
    """statistic(mask) -> vector, evaluated with items where mask is True.

    Items are split into n_groups contiguous blocks; returns (theta, se)
    where theta = statistic(all items). Vector entries that are nan in any
    replicate get se = nan (callers treat them as unreliable).
    """
    if n_groups < 2:
        raise ValueError("need at least 2 groups")
    full = np.ones(n_items, dtype=bool)
    theta = np.asarray(statistic(full), dtype=float)
    bounds = np.linspace(0, n_items, n_groups + 1).astype(int)
    reps = np.empty((n_groups,) + theta.shape)
    for g in range(n_groups):
        mask = full.copy()
        mask[bounds[g]:bounds[g + 1]] = False
        reps[g] = statistic(mask)
    mean_rep = reps.mean(axis=0)
    se = np.sqrt((n_groups - 1) / n_groups * np.sum((reps - mean_rep) ** 2, axis=0))
    return theta, se
