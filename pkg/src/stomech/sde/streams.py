"""Counter-based noise streams.

Each trajectory (and each noise component within a trajectory) owns a stream
keyed by (seed, stream_id). Philox is counter-based, so streams are mutually
independent and reproduce bit-identically no matter how trajectories are
scheduled across threads.
"""

import numpy as np


class NoiseStream:
    """Gaussian increment source keyed by (seed, stream_id).

    Two streams with equal keys produce identical sequences; distinct
    stream_ids are independent. `counter` tracks how many normals were drawn,
    for diagnostics only (Philox advances internally).
    """

    def __init__(self, seed: int, stream_id: int):
        if seed < 0 or stream_id < 0:
            raise ValueError("seed and stream_id must be non-negative")
        self.seed = int(seed)
        self.stream_id = int(stream_id)
        self.counter = 0
        # key = (seed, stream_id): restarting a stream replays it exactly
        self._gen = np.random.Generator(np.random.Philox(key=(self.seed << 64) + self.stream_id))

    def normals(self, n: int) -> np.ndarray:
        """n standard-normal draws."""
        if n < 1:
            raise ValueError("n must be >= 1")
        self.counter += n
        return self._gen.standard_normal(n)

    def wiener_increments(self, n: int, dt: float) -> np.ndarray:
        """n independent Wiener increments: N(0, dt) each."""
        if dt <= 0:
            raise ValueError("dt must be positive")
        return np.sqrt(dt) * self.normals(n)


def wiener_increments(stream: NoiseStream, n: int, dt: float) -> np.ndarray:
    return stream.wiener_increments(n, dt)


def normals_block(seed: int, stream_ids: np.ndarray, n: int) -> np.ndarray:
    """Pregenerate standard normals for many streams, shape (len(ids), n).

    Row i reproduces NoiseStream(seed, stream_ids[i]).normals(n) exactly.
    Used to feed identical noise to both integrator backends.
    """
    out = np.empty((len(stream_ids), n))
    for i, sid in enumerate(stream_ids):
        out[i] = NoiseStream(seed, int(sid)).normals(n)
    return out
