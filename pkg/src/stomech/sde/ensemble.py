"""Ensemble driver: many trajectories, one stream per (trajectory, component).

The driver is process-agnostic. A builder object describes one process family
and knows how to (a) draw initial state plus path noise for a chunk of
trajectory ids and (b) advance that chunk with a kernel. The driver chunks
trajectories with a fixed chunk size, optionally fans chunks out over threads,
and reassembles time-major arrays. Because every random draw comes from the
(seed, stream_id) keyed stream of its own trajectory component, results are
byte-identical for any thread count or chunk schedule.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

CHUNK = 8192  # fixed: chunk boundaries must not depend on thread count


@dataclass
class TrajectoryEnsemble:
    """Recorded ensemble: arrays are time-major, (n_rec, n_traj) per field.

    Multi-particle runs append a particle axis: (n_rec, n_traj, p).
    """

    times: np.ndarray
    fields: dict
    escaped: np.ndarray
    dt: float
    seed: int
    kind: str
    meta: dict = field(default_factory=dict)

    @property
    def n_traj(self) -> int:
        return next(iter(self.fields.values())).shape[1]

    @property
    def x(self) -> np.ndarray:
        return self.fields["x"]

    @property
    def v(self) -> np.ndarray:
        return self.fields["v"]

    @property
    def a(self) -> np.ndarray:
        return self.fields["a"]

    def index_of(self, t: float) -> int:
        """Index of the recorded time nearest t (must match within dt/2)."""
        i = int(np.argmin(np.abs(self.times - t)))
        if abs(self.times[i] - t) > 0.5 * self.dt + 1e-12:
            raise ValueError(f"time {t} not recorded (nearest {self.times[i]})")
        return i

    def at(self, t: float, name: str = "x") -> np.ndarray:
        return self.fields[name][self.index_of(t)]

    def ok(self) -> np.ndarray:
        """Mask of non-escaped trajectories."""
        return ~self.escaped

    def escape_fraction(self) -> float:
        return float(self.escaped.mean())


def run_ensemble(builder, n_traj: int, seed: int, n_threads: int = 1) -> TrajectoryEnsemble:
    """Run `n_traj` trajectories of the builder's process.

    Trajectory j draws from streams (seed, j * n_components + c). Escaped
    trajectories (left the drift grid) are flagged, never silently dropped;
    statistics downstream exclude them. More than 0.1% escapes is an error.
    """
    if n_traj < 1:
        raise ValueError("n_traj must be >= 1")
    n_rec = builder.n_steps // builder.rec_stride + 1
    if builder.n_steps % builder.rec_stride != 0:
        raise ValueError("n_steps must be a multiple of rec_stride")
    shape_tail = (n_traj, builder.n_particles) if builder.n_particles > 1 else (n_traj,)
    fields = {name: np.empty((n_rec,) + shape_tail) for name in builder.record_fields}
    escaped = np.zeros(n_traj, dtype=bool)

    edges = list(range(0, n_traj, CHUNK)) + [n_traj]

    def work(lo, hi):
        ids = np.arange(lo, hi)
        state0, z = builder.init_chunk(ids, seed)
        outs = {name: np.empty((n_rec, hi - lo) + shape_tail[1:]) for name in builder.record_fields}
        esc = np.zeros(hi - lo, dtype=np.int8)
        builder.run_chunk(state0, z, outs, esc)
        for name in builder.record_fields:
            fields[name][:, lo:hi] = outs[name]
        escaped[lo:hi] = esc.astype(bool)

    jobs = [(edges[i], edges[i + 1]) for i in range(len(edges) - 1)]
    if n_threads > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=n_threads) as pool:
            list(pool.map(lambda lohd: work(*lohd), jobs))
    else:
        for lo, hi in jobs:
            work(lo, hi)

    times = builder.dt * builder.rec_stride * np.arange(n_rec)
    ens = TrajectoryEnsemble(
        times=times,
        fields=fields,
        escaped=escaped,
        dt=builder.dt,
        seed=seed,
        kind=getattr(builder, "kind", type(builder).__name__),
        meta=dict(getattr(builder, "meta", {})),
    )
    frac = ens.escape_fraction()
    if frac > 1e-3:
        raise RuntimeError(f"{frac:.2%} of trajectories escaped the drift grid")
    return ens
