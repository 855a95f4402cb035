"""Field layer: mode basis, per-mode dynamics, noise locality, spectra."""

import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stomech.field import (FieldSnapshot, field_nn_residual, ground_mode_samplers,
                           gravitational_spectrum, mode_basis,
                           noise_covariance_check, periodogram,
                           poisson_solve_periodic, potential_spectrum,
                           project_field, reconstruct_field,
                           sample_spectrum_field, simulate_field_phase_space)
from stomech.processes.base import GaussianPositions
from stomech.processes.phase import LinearAccel, simulate_phase_space
from stomech.processes.velocity import (VelocityInitProfile,
                                        construct_initial_phase_density)


# ------------------------------------------------------------ mode basis

@settings(max_examples=60, deadline=None)
@given(L=st.floats(0.5, 20.0), N=st.integers(1, 16), m=st.floats(0.0, 5.0))
def test_mode_basis_is_orthonormal_with_ascending_frequencies(L, N, m):
    modes = mode_basis(L, N, m)
    x = modes.grid(256)
    U = modes.u(x)
    gram = U @ U.T * (L / 256)
    assert np.max(np.abs(gram - np.eye(N))) < 1e-10
    assert np.all(np.diff(modes.omega) >= 0)
    assert np.all(modes.omega >= m)
    assert modes.omega[0] == pytest.approx(m)
    assert np.allclose(modes.omega, np.hypot(m, modes.k))


def test_mode_basis_layout_and_validation():
    modes = mode_basis(2.0 * math.pi, 6, 0.5)
    assert modes.harmonic.tolist() == [0, 1, 1, 2, 2, 3]
    assert modes.trig.tolist() == [0, 0, 1, 0, 1, 0]
    assert np.allclose(modes.k, modes.harmonic)  # L = 2 pi
    x = modes.grid(8)
    assert np.allclose(x, np.arange(8) * (2.0 * math.pi / 8))
    # row 1 is the first cosine, row 2 the first sine
    U = modes.u(np.array([0.0]))
    amp = math.sqrt(2.0 / modes.L)
    assert U[1, 0] == pytest.approx(amp)
    assert U[2, 0] == pytest.approx(0.0, abs=1e-15)
    with pytest.raises(ValueError, match="at least one mode"):
        mode_basis(1.0, 0, 0.0)
    with pytest.raises(ValueError, match="box length"):
        mode_basis(0.0, 3, 0.0)
    with pytest.raises(ValueError, match="field mass"):
        mode_basis(1.0, 3, -0.1)


def test_project_reconstruct_round_trip_and_validation():
    modes = mode_basis(3.0, 7, 1.0)
    x = modes.grid(128)
    rng = np.random.default_rng(4)
    q = rng.standard_normal((25, 7))
    v = rng.standard_normal((25, 7))
    snap = reconstruct_field(q, v, modes, x)
    assert isinstance(snap, FieldSnapshot)
    assert snap.phi.shape == (25, 128)
    assert np.max(np.abs(project_field(snap.phi, modes, x) - q)) < 1e-12
    assert np.max(np.abs(project_field(snap.V, modes, x) - v)) < 1e-12
    with pytest.raises(ValueError, match="share shape"):
        reconstruct_field(q, v[:, :5], modes, x)
    with pytest.raises(ValueError, match="uniform"):
        project_field(snap.phi, modes, x**1.01)
    with pytest.raises(ValueError, match="one period"):
        project_field(snap.phi[:, :64], modes, x[:64])


# --------------------------------------------------------- mode dynamics

def test_single_mode_field_run_is_the_particle_run_bit_for_bit():
    m = 1.3  # one mode means the constant mode, omega = field mass
    modes = mode_basis(2.0 * math.pi, 1, m)
    ensf = simulate_field_phase_space(modes, betas=[50.0], dt=1e-3, T=0.05,
                                      seed=77, n_traj=300, rec_stride=10)
    pos = GaussianPositions(0.0, math.sqrt(1.0 / (2.0 * m)))
    sampler = construct_initial_phase_density(
        pos, lambda q: -m * q, VelocityInitProfile("gaussian_about_b", 0.0))
    ensp = simulate_phase_space(LinearAccel.constant(-m * m), sampler, eps=1.0,
                                beta=50.0, dt=1e-3, T=0.05, seed=77,
                                n_traj=300, rec_stride=10)
    for name in ("x", "v", "a"):
        assert np.array_equal(ensf.fields[name], ensp.fields[name])


def test_ground_mode_variances_stay_at_half_hbar_over_omega():
    modes = mode_basis(2.0 * math.pi, 4, 1.0)
    assert np.allclose(modes.omega, [1.0, math.sqrt(2.0), math.sqrt(2.0),
                                     math.sqrt(5.0)])
    ens = simulate_field_phase_space(modes, betas=60.0 * modes.omega, dt=4e-4,
                                     T=0.2, seed=11, n_traj=15_000,
                                     rec_stride=25)
    q = ens.at(0.15)
    for i, w in enumerate(modes.omega):
        dev = abs(q[:, i].var(ddof=1) / (0.5 / w) - 1.0)
        assert dev < 0.06, f"mode {i}: variance off by {dev:.3f}"


def test_sampler_count_must_match_modes():
    modes = mode_basis(2.0 * math.pi, 3, 1.0)
    samplers = ground_mode_samplers(mode_basis(2.0 * math.pi, 2, 1.0))
    with pytest.raises(ValueError):
        simulate_field_phase_space(modes, betas=np.full(3, 50.0), dt=1e-3,
                                   T=0.01, seed=1, n_traj=10, samplers=samplers)


def test_reconstructed_noise_covariance_matches_truncated_kernel():
    modes = mode_basis(2.0 * math.pi, 8, 1.0)
    ens = simulate_field_phase_space(modes, betas=np.full(8, 50.0), dt=2e-3,
                                     T=0.4, seed=13, n_traj=8_000, rec_stride=4)
    probes = np.array([0.7, 0.7 + math.pi])
    res = noise_covariance_check(ens, modes, probes)
    assert res.n_frames == 51 and res.n_traj == 8_000
    assert np.all(np.abs(res.cov - res.kernel) <= 4.0 * res.cov_se)
    assert np.all(np.abs(res.mean) <= 4.0 * res.mean_se)
    r, se = res.off_diagonal_ratio()
    kernel_ratio = abs(res.kernel[0, 1]) / math.sqrt(res.kernel[0, 0]
                                                     * res.kernel[1, 1])
    assert abs(r - kernel_ratio) <= 4.0 * se
    with pytest.raises(ValueError, match="mode count"):
        noise_covariance_check(ens, mode_basis(2.0 * math.pi, 4, 1.0), probes)


# ------------------------------------------------------- field residual

def test_field_residual_single_mode_reduces_to_particle_norm():
    modes = mode_basis(2.0 * math.pi, 1, 1.0)
    ens = simulate_field_phase_space(modes, betas=[100.0], dt=5e-4, T=0.2,
                                     seed=19, n_traj=20_000, rec_stride=5)
    probes = np.array([0.0, 1.0])
    rep = field_nn_residual(ens, modes, probes, t=0.12, delta=0.01)
    assert rep.mode_norms.shape == (1,)
    assert rep.norm == pytest.approx(rep.mode_norms[0])
    assert rep.pooled_se == pytest.approx(rep.mode_pooled_se[0])
    # constant mode: the spatial residual is norm / sqrt(L) everywhere
    assert np.allclose(rep.residual_at_probes,
                       rep.norm * np.abs(modes.u(probes)[0]))
    # the velocity probe sees the exact oscillator force: residual at noise level
    assert rep.norm <= 4.0 * rep.pooled_se
    assert json.dumps(rep.to_dict())


def test_field_residual_combines_modes_in_quadrature():
    modes = mode_basis(2.0 * math.pi, 2, 1.0)
    ens = simulate_field_phase_space(modes, betas=100.0 * modes.omega, dt=2e-4,
                                     T=0.1, seed=23, n_traj=4_000, rec_stride=5)
    rep = field_nn_residual(ens, modes, probes=[0.0, 2.0], t=0.06, delta=5e-3)
    assert rep.norm == pytest.approx(math.sqrt(np.sum(rep.mode_norms**2)))
    assert rep.pooled_se == pytest.approx(math.sqrt(np.sum(rep.mode_pooled_se**2)))
    U = modes.u(rep.probes)
    assert np.allclose(rep.residual_at_probes,
                       np.sqrt((rep.mode_norms[:, None]**2 * U**2).sum(axis=0)))
    with pytest.raises(ValueError, match="mode count"):
        field_nn_residual(ens, mode_basis(2.0 * math.pi, 3, 1.0), [0.0],
                          t=0.06, delta=5e-3)


# --------------------------------------------------------------- spectra

def test_matter_spectrum_value_and_poisson_transfer_inverse():
    # in 4 pi G = 1 units: P(k, t) = k^4 eps^2 t / xi^2, so P(2, 1) = 16
    assert gravitational_spectrum(2.0, 1.0) == pytest.approx(16.0)
    k = np.linspace(0.3, 5.0, 40)
    t = 0.7
    back = potential_spectrum(lambda kk: gravitational_spectrum(kk, t), k)
    assert np.allclose(back, t)
    with pytest.raises(ValueError, match="xi"):
        gravitational_spectrum(1.0, 1.0, xi=0.0)
    with pytest.raises(ValueError, match="non-negative"):
        gravitational_spectrum(1.0, -0.5)
    with pytest.raises(ValueError, match="zero mode"):
        potential_spectrum(np.ones(3), np.array([0.0, 1.0, 2.0]))
    with pytest.raises(ValueError, match="G must be positive"):
        potential_spectrum(np.ones(2), np.array([1.0, 2.0]), G=0.0)


def test_periodogram_satisfies_parseval():
    rng = np.random.default_rng(6)
    L, n = 5.0, 256
    phi = rng.standard_normal(n)
    k, p = periodogram(phi, L)
    assert len(k) == n // 2 + 1 and k[0] == 0.0
    lhs = float(np.sum(phi**2) * (L / n))
    rhs = p[0] + 2.0 * p[1:-1].sum() + p[-1]
    assert lhs == pytest.approx(rhs, rel=1e-12)


def test_sampled_field_realizes_target_spectrum():
    L, n, n_seeds = 4.0, 64, 400
    power = lambda k: 1.0 + k**2
    acc = np.zeros(n // 2 + 1)
    for r in range(n_seeds):
        phi = sample_spectrum_field(power, L, n, seed=1000 + r)
        assert abs(phi.mean()) < 1e-12
        _, p = periodogram(phi, L)
        acc += p
    k, _ = periodogram(phi, L)
    ratio = acc[1:] / (n_seeds * power(k[1:]))
    assert np.max(np.abs(ratio - 1.0)) < 0.25
    assert acc[0] == pytest.approx(0.0, abs=1e-20)  # mean-free by construction
    with pytest.raises(ValueError, match="even"):
        sample_spectrum_field(power, L, 63, seed=0)
    with pytest.raises(ValueError, match="non-negative"):
        sample_spectrum_field(lambda k: -np.ones_like(k), L, n, seed=0)
    with pytest.raises(ValueError, match="match the rfft"):
        sample_spectrum_field(np.ones(5), L, n, seed=0)


def test_poisson_solver_is_exact_on_stencil_eigenfunctions():
    L, n = 10.0, 128
    x = np.arange(n) * (L / n)
    h = L / n
    kk = 2.0 * math.pi * 3.0 / L
    src = np.cos(kk * x)
    lam = -(2.0 - 2.0 * math.cos(kk * h)) / h**2
    theta = poisson_solve_periodic(src, L)
    assert np.max(np.abs(theta - src / lam)) < 1e-12  # 4 pi G = 1 units
    assert abs(theta.mean()) < 1e-14
    # and the discrete Laplacian of the solution returns the source
    lap = (np.roll(theta, -1) - 2.0 * theta + np.roll(theta, 1)) / h**2
    assert np.max(np.abs(lap - src)) < 1e-9
    with pytest.raises(ValueError, match="nonzero mean"):
        poisson_solve_periodic(src + 0.5, L)
    with pytest.raises(ValueError, match="G must be positive"):
        poisson_solve_periodic(src, L, G=-1.0)
