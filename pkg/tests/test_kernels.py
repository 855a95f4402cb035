"""Compiled kernels against the numpy fallback: outputs must be bit-identical.

Every kernel gets driven with the same pregenerated noise on both backends
and compared with array_equal, no tolerance. The first test asserts the
compiled extension actually loaded; a numpy-only install should fail there,
not silently skip the comparison.
"""

import numpy as np
import pytest

from stomech.sde.kernels import BACKEND, get_backend

RNG = np.random.default_rng(2024)
N, STEPS, STRIDE = 37, 30, 5
N_REC = STEPS // STRIDE + 1


def _both(name, make_args, out_names):
    results = []
    for backend in ("cython", "numpy"):
        k = get_backend(backend)
        args = make_args()
        getattr(k, name)(**args)
        results.append({o: args[o].copy() for o in out_names})
    for o in out_names:
        assert np.array_equal(results[0][o], results[1][o]), f"{name}: {o} differs"
    return results[0]


def test_compiled_backend_is_active():
    assert BACKEND == "cython"
    assert get_backend("cython") is not get_backend("numpy")


def test_ou_paths_backends_bit_identical():
    z = RNG.standard_normal((N, STEPS))

    def args():
        return dict(a0=np.linspace(-1, 1, N), decay=0.97, noise_std=0.3,
                    z=z, rec_stride=STRIDE, out_a=np.empty((N_REC, N)))

    _both("ou_paths", args, ["out_a"])


def test_white_linear_backends_bit_identical():
    z = RNG.standard_normal((N, STEPS))
    c0 = RNG.standard_normal(STEPS)
    c1 = -np.abs(RNG.standard_normal(STEPS))

    def args():
        return dict(x0=np.linspace(-2, 2, N), c0=c0, c1=c1, eps=0.8, dt=1e-2,
                    z=z, rec_stride=STRIDE, out_x=np.empty((N_REC, N)))

    _both("white_linear", args, ["out_x"])


def test_white_table_backends_bit_identical_and_flag_escapes():
    z = 3.0 * RNG.standard_normal((N, STEPS))  # hot noise to force escapes
    tab = np.tile(-np.linspace(-2, 2, 41), (4, 1))

    def args():
        return dict(x0=np.linspace(-1.8, 1.8, N), b_tab=tab, x_lo=-2.0, dx=0.1,
                    slice_stride=10, eps=1.0, dt=5e-2, z=z, rec_stride=STRIDE,
                    out_x=np.empty((N_REC, N)), out_esc=np.zeros(N, np.int8))

    out = _both("white_table", args, ["out_x", "out_esc"])
    assert out["out_esc"].any(), "escape flag never raised by hot noise"


def test_colored_linear_backends_bit_identical():
    z = RNG.standard_normal((N, STEPS))
    c0 = RNG.standard_normal(STEPS)
    c1 = -np.abs(RNG.standard_normal(STEPS))

    def args():
        return dict(x0=np.linspace(-2, 2, N), a0=RNG.standard_normal(N) * 0,
                    c0=c0, c1=c1, eps=0.8, dt=1e-3, decay=0.95, noise_std=0.4,
                    z=z, rec_stride=STRIDE, out_x=np.empty((N_REC, N)),
                    out_a=np.empty((N_REC, N)))

    _both("colored_linear", args, ["out_x", "out_a"])


def test_colored_table_backends_bit_identical():
    z = RNG.standard_normal((N, STEPS))
    tab = np.tile(-np.linspace(-3, 3, 61), (4, 1))

    def args():
        return dict(x0=np.linspace(-1, 1, N), a0=np.zeros(N), b_tab=tab,
                    x_lo=-3.0, dx=0.1, slice_stride=10, eps=1.0, dt=1e-3,
                    decay=0.95, noise_std=0.4, z=z, rec_stride=STRIDE,
                    out_x=np.empty((N_REC, N)), out_a=np.empty((N_REC, N)),
                    out_esc=np.zeros(N, np.int8))

    _both("colored_table", args, ["out_x", "out_a", "out_esc"])


@pytest.mark.parametrize("p", [1, 3])
def test_phase_linear_backends_bit_identical(p):
    z = RNG.standard_normal((N, STEPS, p))
    f = -np.eye(p) - 0.1 * RNG.standard_normal((p, p))
    f2 = np.zeros((p, p))

    def args():
        return dict(x0=np.full((N, p), 0.5), v0=np.zeros((N, p)),
                    a0=np.ones((N, p)), f_pre=f, f_post=f2,
                    switch_step=STEPS // 2, eps=np.full(p, 1.2), dt=1e-3,
                    decay=np.full(p, 0.95), noise_std=np.full(p, 0.4), z=z,
                    rec_stride=STRIDE, out_x=np.empty((N_REC, N, p)),
                    out_v=np.empty((N_REC, N, p)), out_a=np.empty((N_REC, N, p)))

    _both("phase_linear", args, ["out_x", "out_v", "out_a"])


@pytest.mark.parametrize("backend", ["cython", "numpy"])
def test_phase_linear_particle_cap(backend):
    p = 65
    k = get_backend(backend)
    shape = (N_REC, 2, p)
    with pytest.raises(ValueError, match="64"):
        k.phase_linear(np.zeros((2, p)), np.zeros((2, p)), np.zeros((2, p)),
                       np.eye(p), np.eye(p), 0, np.ones(p), 1e-3,
                       np.full(p, 0.95), np.full(p, 0.4),
                       np.zeros((2, STEPS, p)), STRIDE, np.empty(shape),
                       np.empty(shape), np.empty(shape))


def test_phase_table_backends_bit_identical():
    z = RNG.standard_normal((N, STEPS))
    tab = (-np.linspace(-3, 3, 61))[None, :]

    def args():
        return dict(x0=np.linspace(-1, 1, N), v0=np.zeros(N), a0=np.ones(N),
                    acc_tab=tab, x_lo=-3.0, dx=0.1, eps=1.0, dt=1e-3,
                    decay=0.95, noise_std=0.4, z=z, rec_stride=STRIDE,
                    out_x=np.empty((N_REC, N)), out_v=np.empty((N_REC, N)),
                    out_a=np.empty((N_REC, N)), out_esc=np.zeros(N, np.int8))

    _both("phase_table", args, ["out_x", "out_v", "out_a", "out_esc"])


def test_white2d_table_backends_bit_identical():
    z = RNG.standard_normal((N, STEPS, 2))
    gx, gy = 31, 29
    # drift tables are stored float32; arithmetic stays float64 on both sides
    bx = np.tile(-np.linspace(-2, 2, gx), (3, gy, 1)).astype(np.float32)
    by = -np.swapaxes(np.tile(np.linspace(-2, 2, gy), (3, gx, 1)), 1, 2)
    by = np.ascontiguousarray(by, dtype=np.float32)

    def args():
        return dict(x0=np.linspace(-1, 1, N), y0=np.linspace(1, -1, N),
                    bx_tab=bx, by_tab=by, x_lo=-2.0, y_lo=-2.0,
                    dx=4.0 / (gx - 1), dy=4.0 / (gy - 1), slice_stride=10,
                    eps=0.7, dt=1e-2, z=z, rec_stride=STRIDE,
                    out_x=np.empty((N_REC, N)), out_y=np.empty((N_REC, N)),
                    out_esc=np.zeros(N, np.int8))

    _both("white2d_table", args, ["out_x", "out_y", "out_esc"])


def test_full_phase_run_matches_across_backends(monkeypatch):
    """The ensemble path through the dispatch module is backend-invariant."""
    import stomech.sde.kernels as dispatch
    from stomech.processes.base import GaussianPositions
    from stomech.processes.phase import LinearAccel, simulate_phase_space
    from stomech.processes.velocity import (VelocityInitProfile,
                                            construct_initial_phase_density)

    def run():
        sampler = construct_initial_phase_density(
            GaussianPositions(0.0, 0.7), lambda x: -x,
            VelocityInitProfile("gaussian_about_b", 0.0))
        return simulate_phase_space(LinearAccel.constant(-1.0), sampler,
                                    eps=1.0, beta=40.0, dt=1e-3, T=0.05,
                                    seed=3, n_traj=200, rec_stride=10)

    ref = run()
    monkeypatch.setattr(dispatch, "phase_linear", get_backend("numpy").phase_linear)
    alt = run()
    for name in ref.fields:
        assert np.array_equal(ref.fields[name], alt.fields[name])