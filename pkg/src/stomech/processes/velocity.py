"""Initial conditional-velocity densities.

The phase-space construction only pins the conditional mean: given x, the
sampled v must average to the drift b(x, 0). Any spread around it is free,
so two deliberately different families are provided to let experiments test
whether the choice leaves a trace downstream.
"""

from dataclasses import dataclass

import numpy as np

FAMILIES = ("gaussian_about_b", "two_point_about_b")


@dataclass(frozen=True)
class VelocityInitProfile:
    """family 'gaussian_about_b': v = b(x) + s z; 'two_point_about_b':
    v = b(x) +- s with equal probability. s = 0 degenerates to v = b(x)."""

    family: str = "gaussian_about_b"
    s: float = 0.0

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown velocity profile {self.family!r}; known: {FAMILIES}")
        if self.s < 0:
            raise ValueError("velocity spread s must be non-negative")

    def draw(self, b_at_x: np.ndarray, z: np.ndarray) -> np.ndarray:
        """Map one standard normal per trajectory to a velocity sample."""
        if self.family == "gaussian_about_b":
            return b_at_x + self.s * z
        # a fair two-point law from the sign of the normal draw
        return b_at_x + self.s * np.sign(z) + self.s * (z == 0.0)


class PhaseDensitySampler:
    """Joint (x, v) sampler with conditional mean E[v | x] = b0(x) exactly."""

    def __init__(self, positions, b0, profile: VelocityInitProfile):
        self.positions = positions
        self.b0 = b0
        self.profile = profile

    def draw(self, z_x: np.ndarray, z_v: np.ndarray):
        x = self.positions.draw(z_x)
        v = self.profile.draw(self.b0(x), z_v)
        return x, v

    def sample(self, n: int, seed: int):
        """Standalone sampling (its own streams); builders use draw()."""
        from ..sde.streams import NoiseStream

        z_x = NoiseStream(seed, 0).normals(n)
        z_v = NoiseStream(seed, 1).normals(n)
        return self.draw(z_x, z_v)


def construct_initial_phase_density(positions, b0, profile: VelocityInitProfile) -> PhaseDensitySampler:
    """positions: object with draw(z) -> x; b0: callable b(x) at t = 0."""
    if not callable(b0):
        field = b0
        x_grid, b_grid = field.x, field.b
        b0 = lambda x: np.interp(x, x_grid, b_grid)
    return PhaseDensitySampler(positions, b0, profile)
