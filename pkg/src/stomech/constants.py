"""Numerical policy constants shared across modules.

These are contract values: tests pin behavior to them, so changing one is an
interface change, not a tuning knob.
"""

# colored-noise resolution rule: dt * beta must not exceed this
DT_BETA_MAX = 0.1

# colored-noise experiments discard t < BURN_IN_FACTOR / beta before statistics
BURN_IN_FACTOR = 10.0

# density threshold, relative to max(rho), below which drift fields are masked
NODE_EPS_REL = 1e-8

# clamp magnitude for the drift outside the valid mask (points away from node)
B_MAX = 1e3

# conditional-mean bins with fewer samples are marked unreliable
N_MIN = 50

# default estimator lag, in units of the integrator step
DELTA_OVER_DT = 10

# strata for averaging over measurement outcomes in two-time experiments
N_STRATA = 64

# collapse regularization width, in grid cells
COLLAPSE_WIDTH_CELLS = 2.0
