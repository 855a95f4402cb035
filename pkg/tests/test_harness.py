"""Harness layer: metrics, measurement collapse, and the criterion runners.

The runners are exercised at reduced size here (smaller ensembles, shorter
windows, coarser grids); the full-protocol numbers live in the acceptance
suite. Reduced runs still compare every stochastic arm against its own
oracle, so the assertions are sigma bounds, not magic constants.
"""

import json
import math
from types import SimpleNamespace

import numpy as np
import pytest

from stomech.estimators.conditional import conditional_mean
from stomech.harness import (COLORED_PROTOCOL, WHITE_PROTOCOL, MeasurementPlan,
                             collapse_density, collapse_state,
                             decoupling_experiment, field_mismatch,
                             marginal_distance, observable, run_beta_sweep,
                             run_first_law_check, run_law_violation_check,
                             run_two_time_report, run_velocity_profile_probe,
                             slope_through_origin, trend_verdict,
                             two_time_expectation)
from stomech.harness.collapse import GridPositions2D
from stomech.quantum.catalog import TwoParticleGaussian
from stomech.quantum.evolve import WavefunctionState
from stomech.quantum.grid import Grid2D


# ---------------------------------------------------------------- metrics

def _gaussian_on(x, mean, sigma):
    rho = np.exp(-0.5 * ((x - mean) / sigma) ** 2)
    return rho / (rho.sum() * (x[1] - x[0]))


def test_marginal_distance_identity_and_symmetry():
    x = np.arange(-10.0, 10.0, 0.01)
    a = _gaussian_on(x, 0.0, 0.5)
    b = _gaussian_on(x, 1.0, 0.8)
    for metric in ("l1", "w1"):
        assert marginal_distance(a, a, 0.01, metric) == 0.0
        d_ab = marginal_distance(a, b, 0.01, metric)
        assert d_ab > 0
        assert marginal_distance(b, a, 0.01, metric) == pytest.approx(d_ab)


def test_w1_is_exact_on_translates_and_l1_saturates_when_disjoint():
    # a pure shift by k cells telescopes the CDF difference to exactly k*dx
    dx = 0.01
    x = np.arange(-10.0, 10.0, dx)
    a = _gaussian_on(x, -5.0, 0.5)
    b = np.roll(a, 137)
    assert marginal_distance(a, b, dx, "w1") == pytest.approx(1.37, abs=1e-9)
    far = np.roll(a, 800)
    assert marginal_distance(a, far, dx, "w1") == pytest.approx(8.0, abs=1e-9)
    assert marginal_distance(a, far, dx, "l1") == pytest.approx(2.0, abs=1e-6)


def test_marginal_distance_validation():
    x = np.arange(-5.0, 5.0, 0.01)
    a = _gaussian_on(x, 0.0, 0.5)
    with pytest.raises(ValueError, match="not normalized"):
        marginal_distance(2.0 * a, a, 0.01)
    with pytest.raises(ValueError, match="share a grid"):
        marginal_distance(a, a[:-1] / (a[:-1].sum() * 0.01), 0.01)
    with pytest.raises(ValueError, match="unknown metric"):
        marginal_distance(a, a, 0.01, metric="l2")


def test_slope_through_origin_is_inverse_variance_weighted():
    f = SimpleNamespace(x_mean=np.array([1.0, 2.0, 10.0]),
                        estimate=np.array([1.0, 4.0, -100.0]),
                        stderr=np.array([1.0, 0.5, 0.01]),
                        reliable=np.array([True, True, False]))
    slope, se = slope_through_origin(f)
    # w = (1, 4); slope = (1*1*1 + 4*2*4) / (1 + 4*4); garbage bin excluded
    assert slope == pytest.approx(33.0 / 17.0)
    assert se == pytest.approx(math.sqrt(1.0 / 17.0))
    f.reliable = np.zeros(3, dtype=bool)
    with pytest.raises(ValueError, match="no reliable bins"):
        slope_through_origin(f)


def test_field_mismatch_weights_counts_and_falls_back_to_mean_sem():
    f = SimpleNamespace(x_mean=np.array([1.0, 2.0, 5.0]),
                        estimate=np.array([1.0, 4.0, 99.0]),
                        stderr=np.array([0.2, 0.4, 7.0]),
                        count=np.array([100, 300, 999]),
                        reliable=np.array([True, True, False]))
    norm, pooled = field_mismatch(f, lambda x: x**2)
    assert norm == 0.0
    assert pooled == pytest.approx(math.sqrt(0.25 * 0.2**2 + 0.75 * 0.4**2))
    norm_off, _ = field_mismatch(f, lambda x: x**2 + 1.0)
    assert norm_off == pytest.approx(1.0)

    # BinnedConditional carries mean/sem instead of estimate/stderr
    rng = np.random.default_rng(8)
    x = rng.uniform(0.0, 2.0, 1000)
    bc = conditional_mean(x, 3.0 * x, np.linspace(0.0, 2.0, 5))
    norm, pooled = field_mismatch(bc, lambda x: 3.0 * x)
    assert norm == pytest.approx(0.0, abs=1e-12)
    assert pooled > 0

    f.reliable = np.zeros(3, dtype=bool)
    with pytest.raises(ValueError, match="no reliable bins"):
        field_mismatch(f, lambda x: x)


def test_trend_verdict_resolves_only_outside_error_bars():
    v = trend_verdict([3.0, 2.0, 2.1, 1.0], [0.1, 0.1, 0.1, 0.1])
    assert v["pairs"] == ["decrease", "unresolved", "decrease"]
    assert v["non_increasing"] is True
    up = trend_verdict([1.0, 2.0], [0.1, 0.1])
    assert up["pairs"] == ["increase"]
    assert up["non_increasing"] is False
    flat = trend_verdict([1.0, 1.0], [0.5, 0.5])
    assert flat["pairs"] == ["unresolved"]
    assert flat["non_increasing"] is True


# ------------------------------------------------- observables and plans

def test_observable_poly_and_indicator():
    p = observable(("poly", (1.0, 0.0, 2.0)))
    assert p(3.0) == pytest.approx(19.0)
    assert np.allclose(p(np.array([0.0, -1.0])), [1.0, 3.0])
    ind = observable(("indicator", -1.0, 2.0))
    got = ind(np.array([-1.5, -1.0, 0.0, 2.0, 2.5]))
    assert np.array_equal(got, [0.0, 1.0, 1.0, 1.0, 0.0])
    with pytest.raises(ValueError, match="lo < hi"):
        observable(("indicator", 2.0, 1.0))
    with pytest.raises(ValueError, match="unknown observable kind"):
        observable(("abs",))


def test_measurement_plan_validation():
    MeasurementPlan(0.4, 0.4)  # equal times are the degenerate limit, allowed
    with pytest.raises(ValueError, match="0 <= t1 <= t2"):
        MeasurementPlan(-0.1, 0.5)
    with pytest.raises(ValueError, match="0 <= t1 <= t2"):
        MeasurementPlan(1.0, 0.5)
    with pytest.raises(ValueError, match="particle"):
        MeasurementPlan(0.2, 0.5, particle=2)
    with pytest.raises(ValueError, match="lo < hi"):
        MeasurementPlan(0.2, 0.5, f=("indicator", 2.0, 1.0))


# ----------------------------------------------------- collapse operators

SIGMA = np.array([[1.0, 0.5], [0.5, 0.8]])


def _joint_gaussian(grid):
    X1, X2 = grid.mesh()
    P = np.linalg.inv(SIGMA)
    q = P[0, 0] * X1**2 + 2.0 * P[0, 1] * X1 * X2 + P[1, 1] * X2**2
    rho = np.exp(-0.5 * q)
    return rho / (rho.sum() * grid.dx * grid.dx)


def test_collapse_density_keeps_gaussian_conditioning_exact():
    g = Grid2D(-6.0, 6.0, 256)
    rho = _joint_gaussian(g)
    X1, X2 = g.mesh()
    xbar, w = 0.7, 0.15
    out = collapse_density(rho, g, xbar, w, axis=0)
    assert out.sum() * g.dx * g.dx == pytest.approx(1.0)
    # measured marginal is the window itself; the other coordinate keeps the
    # exact Gaussian conditional mean and variance (plus the window spread)
    win = np.exp(-0.5 * ((g.x - xbar) / w) ** 2)
    win /= win.sum() * g.dx
    assert np.max(np.abs(out.sum(axis=1) * g.dx - win)) < 1e-12
    m1 = np.sum(out * X2) * g.dx * g.dx
    slope = SIGMA[0, 1] / SIGMA[0, 0]
    assert m1 == pytest.approx(slope * xbar, abs=1e-8)
    v1 = np.sum(out * (X2 - m1) ** 2) * g.dx * g.dx
    v_expect = SIGMA[1, 1] - SIGMA[0, 1] ** 2 / SIGMA[0, 0] + slope**2 * w**2
    assert v1 == pytest.approx(v_expect, abs=1e-8)
    out1 = collapse_density(rho, g, xbar, w, axis=1)
    m0 = np.sum(out1 * X1) * g.dx * g.dx
    assert m0 == pytest.approx(SIGMA[0, 1] / SIGMA[1, 1] * xbar, abs=1e-8)


def test_collapse_density_rejects_bad_mass():
    g = Grid2D(-6.0, 6.0, 128)
    rho = _joint_gaussian(g)
    with pytest.raises(ValueError, match="not normalized"):
        collapse_density(2.0 * rho, g, 0.0, 0.2)
    # outcome at the support edge: window alive but no density under it
    with pytest.raises(ValueError, match="degenerate measurement"):
        collapse_density(rho, g, 5.8, 0.1)
    # outcome far off the grid: the window itself underflows to zero
    with pytest.raises(ValueError, match="degenerate measurement"):
        collapse_density(rho, g, 25.0, 0.1)


def test_collapse_state_matches_gaussian_precision_update():
    g = Grid2D(-6.0, 6.0, 256)
    rho = _joint_gaussian(g)
    st = WavefunctionState(grid=g, psi=np.sqrt(rho).astype(complex),
                           m=1.0, hbar=1.0, t=0.0).normalized()
    xbar, w = 0.7, 0.15
    stc = collapse_state(st, xbar, w, axis=0)
    assert float(g.integrate(stc.rho).real) == pytest.approx(1.0, abs=1e-12)
    # |psi_m|^2 = window * rho, a precision update P -> P + e0 e0^T / w^2
    Pp = np.linalg.inv(SIGMA) + np.diag([1.0 / w**2, 0.0])
    Sp = np.linalg.inv(Pp)
    mup = Sp[:, 0] * xbar / w**2
    X1, X2 = g.mesh()
    wts = stc.rho / stc.rho.sum()
    mm = np.array([np.sum(wts * X1), np.sum(wts * X2)])
    assert np.max(np.abs(mm - mup)) < 1e-10
    assert np.max(np.abs(stc.cov() - Sp)) < 1e-10
    with pytest.raises(ValueError, match="degenerate measurement"):
        collapse_state(st, 25.0, w)


def test_grid_positions_2d_reproduces_joint_moments():
    g = Grid2D(-6.0, 6.0, 256)
    pos = GridPositions2D(g.x, _joint_gaussian(g))
    rng = np.random.default_rng(99)
    x0, x1 = pos.draw(rng.standard_normal(200_000), rng.standard_normal(200_000))
    assert abs(x0.mean()) < 0.01 and abs(x1.mean()) < 0.01
    assert np.max(np.abs(np.cov(np.stack([x0, x1])) - SIGMA)) < 0.01
    with pytest.raises(ValueError, match="identically zero"):
        GridPositions2D(g.x, np.zeros((256, 256)))


# ------------------------------------------------- two-time correlators

def test_equal_time_correlator_agrees_on_off_and_with_closed_form():
    state = TwoParticleGaussian()
    cf = float(state.two_time_xx(0.4, 0.4)[0, 1])
    on = two_time_expectation(MeasurementPlan(0.4, 0.4), grid_n=192,
                              n_per_stratum=400, n_off=30_000, seed=7)
    off = two_time_expectation(MeasurementPlan(0.4, 0.4, collapse=False),
                               grid_n=192, n_per_stratum=400, n_off=30_000,
                               seed=7)
    assert on.meta["collapse"] is True and off.meta["collapse"] is False
    assert on.meta["n_strata"] == 64
    # both arms share the same collapsed oracle, computed deterministically
    assert off.oracle == on.oracle
    assert abs(on.value - on.oracle) <= 4.0 * on.stderr
    assert abs(off.value - cf) <= 4.0 * off.stderr
    # collapse at equal times only biases by the regularization width
    assert abs(on.oracle - cf) < 0.05
    assert abs(on.value - off.value) < 0.05


def test_two_time_report_bundle_on_reduced_protocol():
    state = TwoParticleGaussian()
    rep = run_two_time_report(MeasurementPlan(0.2, 0.3), grid_n=160,
                              n_per_stratum=300, n_off=30_000, dt=4e-3,
                              slice_stride=5, seed=9)
    cf = float(state.two_time_xx(0.2, 0.3)[0, 1])
    assert rep.oracle_closed_form == pytest.approx(cf)
    assert abs(rep.oracle_off_flow - cf) < 5e-3
    assert abs(rep.stoch_on - rep.oracle_on) <= 4.0 * rep.se_on
    assert abs(rep.stoch_off - rep.oracle_off_flow) <= 4.0 * rep.se_off
    # halving the window halves its bias: the half-width oracle sits closer
    # to the closed form, and its trajectory arm still tracks it
    wh = rep.width_half
    assert wh["width"] == pytest.approx(0.5 * rep.width)
    assert abs(wh["oracle_on"] - cf) < abs(rep.oracle_on - cf)
    assert abs(wh["stoch_on"] - wh["oracle_on"]) <= 4.0 * wh["se_on"]
    # density-independent control: collapse must not matter
    c = rep.control
    assert abs(c["on"] - c["off"]) <= 4.0 * math.hypot(c["on_se"], c["off_se"])
    assert rep.n_strata == 64 and rep.runtime_s > 0
    d = rep.to_dict()
    assert json.dumps(d)
    assert d["oracle_on"] == rep.oracle_on


def test_decoupled_pair_tracks_exact_joint_covariance():
    dec = decoupling_experiment(T=0.5, dt=2e-3, beta=50.0, n_traj=20_000,
                                rec_stride=50, seed=5)
    assert np.allclose(dec.times, 0.1 * np.arange(6))
    cov0 = TwoParticleGaussian().cov_xx(0.0)
    assert dec.cov12_oracle[0] == pytest.approx(cov0[0, 1])
    assert dec.max_sigma() < 4.0
    assert np.allclose(dec.var1, dec.var1_oracle, rtol=0.05)
    # the initial entanglement persists across the whole decoupled window
    assert dec.cov12.min() > 0.2
    assert json.dumps(dec.to_dict())


# ----------------------------------------------------------- law checks

def test_first_law_reduced_run_tracks_all_states():
    rep = run_first_law_check(n_traj=20_000, dt=2.5e-3, T=0.5, n_checkpoints=2,
                              seed=3, states=("ho_ground", "free_gaussian"))
    assert len(rep.rows) == 4
    assert sorted({r["t"] for r in rep.rows}) == [0.25, 0.5]
    assert rep.max_l1 == max(r["l1"] for r in rep.rows)
    assert rep.max_l1 < 0.06
    assert all(r["l1_se"] > 0 and r["w1"] > 0 for r in rep.rows)
    assert len(rep.var_rows) == 2
    assert rep.var_rows[0]["var_oracle"] == pytest.approx(1.0 + 0.125**2)
    assert rep.max_var_rel_err < 0.05
    assert json.dumps(rep.to_dict())


def test_first_law_rejects_uneven_checkpoints():
    with pytest.raises(ValueError, match="split evenly"):
        run_first_law_check(dt=2.5e-3, T=0.5, n_checkpoints=3)


def test_law_violation_signs_on_reduced_protocols():
    rep = run_law_violation_check(seed=21,
                                  white=dict(n_traj=40_000, t_star=0.2, T=0.24),
                                  colored=dict(n_traj=30_000))
    # grad of the quantum potential of the ground state, density-weighted:
    # m omega^2 sigma = 1/sqrt(2) at unit constants
    assert rep.qp_force_norm == pytest.approx(2**-0.5, abs=1e-3)
    assert rep.colored["ideal_norm"] == pytest.approx(math.sqrt(2.0))
    w, c = rep.white, rep.colored
    assert w["slope"] < 0.0 < c["slope"]
    assert abs(w["slope"] + 1.0) <= 3.0 * w["slope_se"]
    assert abs(c["slope"] - 1.0) <= 3.0 * c["slope_se"]
    assert c["slope"] > 3.0 * c["slope_se"]
    assert w["residual_norm"] <= 3.0 * w["pooled_se"]
    assert c["residual_norm"] > w["residual_norm"]
    for rows in (w, c):
        assert {"slope_half_lag", "slope_se_half_lag", "residual_norm_half_lag",
                "pooled_se_half_lag"} <= set(rows)
    assert w["protocol"]["n_traj"] == 40_000
    assert w["protocol"]["dt"] == WHITE_PROTOCOL["dt"]
    assert c["protocol"]["beta"] == COLORED_PROTOCOL["beta"]
    assert json.dumps(rep.to_dict())


def test_velocity_profiles_with_matched_spread_agree():
    rep = run_velocity_profile_probe(spread=0.5, beta=50.0, dt=1e-3, T=0.2,
                                     n_traj=20_000, seed=31)
    assert rep.within is True
    assert rep.distance <= 2.0 * rep.combined_error
    m = rep.moments
    assert set(m) == {"gaussian_about_b", "two_point_about_b"}
    g, t = m["gaussian_about_b"], m["two_point_about_b"]
    assert abs(g["mean"] - t["mean"]) <= 4.0 * math.hypot(g["mean_se"], t["mean_se"])
    assert abs(g["var"] - t["var"]) <= 4.0 * math.hypot(g["var_se"], t["var_se"])
    assert json.dumps(rep.to_dict())


# --------------------------------------------------------------- sweeps

ROW_KEYS = {"beta", "dt", "delta", "t_star", "l1", "l1_se", "w1", "w1_se",
            "residual_norm", "pooled_se", "drift_mismatch",
            "drift_mismatch_se", "l1_dt_half", "l1_se_dt_half"}


def test_beta_sweep_reports_rows_and_trends():
    rep = run_beta_sweep("ho_ground", "nelson_white", [5.0, 20.0],
                         n_traj=20_000, seed=41, bin_span=2.0, n_bins=10)
    assert [r["beta"] for r in rep.rows] == [5.0, 20.0]
    for r in rep.rows:
        assert ROW_KEYS <= set(r)
        assert r["dt"] == pytest.approx(0.05 / r["beta"])
        assert r["delta"] == pytest.approx(10.0 * r["dt"])
        assert r["t_star"] == pytest.approx(15.0 / r["beta"])
    # the white diffusion is the tracked process itself at every beta
    assert rep.column("l1").max() < 0.05
    assert set(rep.trends) == {"l1", "w1", "drift_mismatch", "residual_norm"}
    for t in rep.trends.values():
        assert len(t["pairs"]) == 1
        assert t["pairs"][0] in ("decrease", "increase", "unresolved")
    assert rep.notes == []
    assert np.array_equal(rep.column("w1"), [r["w1"] for r in rep.rows])
    assert json.dumps(rep.to_dict())


def test_beta_sweep_phase_space_probes_force_not_transport():
    rep = run_beta_sweep("ho_ground", "phase_space", [20.0], n_traj=20_000,
                         seed=41, bin_span=2.0, n_bins=10)
    # the velocity-increment probe sees the actual force, so the residual
    # stays far below the white-noise violation scale sqrt(2)
    assert rep.rows[0]["residual_norm"] < 0.1
    assert any("finite-window" in note for note in rep.notes)


def test_beta_sweep_validation_and_determinism():
    with pytest.raises(ValueError, match="ascending"):
        run_beta_sweep("ho_ground", "nelson_white", [20.0, 5.0])
    with pytest.raises(ValueError, match="burn-in"):
        run_beta_sweep("ho_ground", "nelson_white", [10.0], t_factor=10.0)
    with pytest.raises(ValueError, match="unknown process kind"):
        run_beta_sweep("ho_ground", "magenta", [10.0], n_traj=5_000)
    a = run_beta_sweep("ho_ground", "nelson_white", [10.0], n_traj=5_000,
                       seed=17, bin_span=2.0, n_bins=8)
    b = run_beta_sweep("ho_ground", "nelson_white", [10.0], n_traj=5_000,
                       seed=17, bin_span=2.0, n_bins=8)
    assert a.rows == b.rows
