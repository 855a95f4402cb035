"""Noise streams, OU updates, the Euler integrator, ensemble plumbing."""

import math

import numpy as np
import pytest

from stomech.processes.base import GaussianPositions, LinearDrift
from stomech.processes.nelson import simulate_nelson
from stomech.sde.integrate import IntegratorConfig, euler_maruyama
from stomech.sde.ou import (autocovariance, ou_exact_step_factors,
                            ou_stationary_sample, simulate_ou,
                            stationary_variance)
from stomech.sde.streams import NoiseStream, normals_block


# ------------------------------------------------------------------ streams

def test_stream_replay_is_exact():
    a = NoiseStream(7, 3).normals(100)
    b = NoiseStream(7, 3).normals(100)
    assert np.array_equal(a, b)


def test_streams_differ_across_ids_and_seeds():
    base = NoiseStream(7, 3).normals(100)
    assert not np.array_equal(base, NoiseStream(7, 4).normals(100))
    assert not np.array_equal(base, NoiseStream(8, 3).normals(100))


def test_normals_block_matches_per_stream_draws():
    ids = np.array([0, 5, 17])
    block = normals_block(11, ids, 64)
    for row, sid in zip(block, ids):
        assert np.array_equal(row, NoiseStream(11, int(sid)).normals(64))


def test_wiener_increment_scaling():
    z = NoiseStream(1, 0).wiener_increments(200_000, dt=0.25)
    assert abs(z.var() - 0.25) < 0.005
    assert abs(z.mean()) < 0.005


# ----------------------------------------------------------------------- OU

def test_ou_exact_step_factors_match_conditional_law():
    beta, dt = 37.0, 1e-3
    decay, noise_std = ou_exact_step_factors(beta, dt)
    assert decay == pytest.approx(math.exp(-beta * dt), rel=1e-14)
    assert noise_std**2 == pytest.approx(
        0.5 * beta * (1.0 - math.exp(-2.0 * beta * dt)), rel=1e-12)


def test_ou_stationary_moments_and_decay_rate():
    beta = 20.0
    cfg = IntegratorConfig(dt=0.1 / beta, n_steps=4000)
    paths = np.stack([
        simulate_ou(beta, ou_stationary_sample(beta, NoiseStream(3, 2 * i))[0],
                    cfg, NoiseStream(3, 2 * i + 1))
        for i in range(100)])
    assert abs(paths.var() / stationary_variance(beta) - 1.0) < 0.05
    # fit the autocovariance decay over lags inside one correlation time
    lags = np.arange(1, 21)
    emp = np.array([np.mean(paths[:, :-l] * paths[:, l:]) for l in lags])
    rate = -np.polyfit(lags * cfg.dt, np.log(emp), 1)[0]
    assert abs(rate / beta - 1.0) < 0.10
    assert np.allclose(autocovariance(beta, 0.0), stationary_variance(beta))


def test_ou_euler_weak_error_scales_linearly_in_dt():
    """Stationary-variance bias of the Euler chain is beta*dt/(2-beta*dt).

    Exact and Euler updates consume the same normals, so the empirical
    variance ratio isolates the bias with almost no Monte Carlo noise.
    """
    beta = 4.0
    errs = []
    for i, bdt in enumerate((0.08, 0.04, 0.02)):
        cfg = IntegratorConfig(dt=bdt / beta, n_steps=40_000)
        burn = 8000
        exact = simulate_ou(beta, 0.0, cfg, NoiseStream(5, i))
        euler = simulate_ou(beta, 0.0, cfg, NoiseStream(5, i), method="euler")
        errs.append(euler[burn:].var() / exact[burn:].var() - 1.0)
    assert errs[0] / errs[1] == pytest.approx(2.0, rel=0.25)
    assert errs[1] / errs[2] == pytest.approx(2.0, rel=0.25)


def test_ou_rejects_under_resolved_steps():
    with pytest.raises(ValueError, match="under-resolved"):
        simulate_ou(100.0, 0.0, IntegratorConfig(dt=0.01, n_steps=10),
                    NoiseStream(0, 0))


# ----------------------------------------------------------------- integrate

def test_euler_deterministic_error_scales_linearly_in_dt():
    """Weak convergence probe: zero noise isolates the O(dt) mean error."""
    errs = []
    for dt in (0.04, 0.02, 0.01):
        cfg = IntegratorConfig(dt=dt, n_steps=round(1.0 / dt))
        x = euler_maruyama(lambda x, t: -x, 0.0, 2.0, cfg, NoiseStream(0, 0))
        errs.append(abs(x[-1] - 2.0 * math.exp(-1.0)))
    assert errs[0] / errs[1] == pytest.approx(2.0, rel=0.15)
    assert errs[1] / errs[2] == pytest.approx(2.0, rel=0.15)


def test_euler_aborts_on_non_finite_drift():
    cfg = IntegratorConfig(dt=0.1, n_steps=10)
    with pytest.raises(FloatingPointError):
        euler_maruyama(lambda x, t: float("nan"), 1.0, 0.0, cfg, NoiseStream(0, 0))


def test_integrator_config_validation():
    with pytest.raises(ValueError):
        IntegratorConfig(dt=0.0, n_steps=10)
    with pytest.raises(ValueError):
        IntegratorConfig(dt=0.1, n_steps=0)
    assert np.allclose(IntegratorConfig(dt=0.5, n_steps=4).times,
                       [0.0, 0.5, 1.0, 1.5, 2.0])


# ------------------------------------------------------------------ ensemble

def _small_white_run(n_threads):
    n_steps = 100
    drift = LinearDrift(c0=np.zeros(n_steps), c1=np.full(n_steps, -1.0))
    pos = GaussianPositions(0.0, 1.0)
    return simulate_nelson(drift, pos, eps=1.0, dt=1e-2, T=1.0, seed=42,
                           n_traj=500, rec_stride=10, n_threads=n_threads)


def test_ensemble_identical_across_thread_counts():
    one = _small_white_run(1)
    four = _small_white_run(4)
    for name in one.fields:
        assert np.array_equal(one.fields[name], four.fields[name])
    assert np.array_equal(one.ok(), four.ok())


def test_ensemble_time_indexing():
    ens = _small_white_run(1)
    assert np.allclose(ens.times, np.arange(11) * 0.1)
    assert ens.at(0.5).shape == (500,)
    with pytest.raises(ValueError, match="not recorded"):
        ens.at(0.55)


def test_ensemble_rerun_is_bit_identical():
    a, b = _small_white_run(1), _small_white_run(1)
    assert np.array_equal(a.x, b.x)
    assert a.escape_fraction() == 0.0


def test_single_trajectory_embeds_in_any_ensemble():
    """The j-th trajectory must not depend on how many others run with it."""
    big = _small_white_run(1)
    n_steps = 100
    drift = LinearDrift(c0=np.zeros(n_steps), c1=np.full(n_steps, -1.0))
    solo = simulate_nelson(drift, GaussianPositions(0.0, 1.0), eps=1.0,
                           dt=1e-2, T=1.0, seed=42, n_traj=1, rec_stride=10)
    assert np.array_equal(solo.x[:, 0], big.x[:, 0])