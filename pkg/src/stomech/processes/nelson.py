"""White-noise Nelson diffusion: dx = b(x, t) dt + eps dW, eps = sqrt(hbar/m)."""

from ..sde import kernels
from ..sde.ensemble import run_ensemble
from .base import LinearDrift, TableDrift, chunk_noise


class WhiteNelsonBuilder:
    """Driver-protocol builder for the white Nelson process."""

    kind = "nelson_white"
    record_fields = ("x",)
    n_particles = 1
    n_components = 1
    n_init = 1

    def __init__(self, drift, positions, eps: float, dt: float, n_steps: int,
                 rec_stride: int = 1):
        if eps < 0:
            raise ValueError("eps must be non-negative")
        self.drift = drift
        self.positions = positions
        self.eps = eps
        self.dt = dt
        self.n_steps = n_steps
        self.rec_stride = rec_stride
        self.meta = {"eps": eps, "drift": type(drift).__name__}
        if isinstance(drift, LinearDrift) and len(drift.c0) != n_steps:
            raise ValueError("drift schedule length must equal n_steps")

    def init_chunk(self, ids, seed):
        init, z = chunk_noise(ids, seed, self.n_components, self.n_init, self.n_steps)
        x0 = self.positions.draw(init[:, 0, 0])
        return {"x": x0}, z[:, :, 0]

    def run_chunk(self, state0, z, outs, esc):
        d = self.drift
        if isinstance(d, LinearDrift):
            kernels.white_linear(state0["x"], d.c0, d.c1, self.eps, self.dt, z,
                                 self.rec_stride, outs["x"])
        elif isinstance(d, TableDrift):
            kernels.white_table(state0["x"], d.tab, d.x_lo, d.dx, d.slice_stride,
                                self.eps, self.dt, z, self.rec_stride, outs["x"], esc)
        else:
            raise TypeError(f"unsupported drift description {type(d).__name__}")


def simulate_nelson(drift, positions, eps: float, dt: float, T: float, seed: int,
                    n_traj: int, rec_stride: int = 1, n_threads: int = 1):
    """Euler-Maruyama ensemble of dx = b dt + eps dW.

    drift: LinearDrift or TableDrift covering [0, T); positions: initial
    sampler matching the oracle density at t = 0.
    """
    n_steps = round(T / dt)
    if abs(n_steps * dt - T) > 1e-9 * max(1.0, T):
        raise ValueError("T must be an integer number of steps")
    b = WhiteNelsonBuilder(drift, positions, eps, dt, n_steps, rec_stride)
    return run_ensemble(b, n_traj, seed, n_threads=n_threads)
