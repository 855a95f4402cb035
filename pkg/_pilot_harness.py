import math
import time

import numpy as np

from stomech.harness import (MeasurementPlan, collapse_density, collapse_state,
                             decoupling_experiment, run_beta_sweep,
                             run_first_law_check, run_law_violation_check,
                             run_two_time_report, run_velocity_profile_probe,
                             two_time_expectation)
from stomech.harness.collapse import GridPositions2D
from stomech.quantum.catalog import TwoParticleGaussian
from stomech.quantum.evolve import WavefunctionState
from stomech.quantum.grid import Grid2D

def sec(name):
    print(f"\n=== {name} ===", flush=True)

# --- collapse_density Gaussian identities ---
sec("collapse_density identities")
g = Grid2D(-6.0, 6.0, 256)
X1, X2 = g.mesh()
S = np.array([[1.0, 0.5], [0.5, 0.8]])
P = np.linalg.inv(S)
q = P[0, 0] * X1**2 + 2 * P[0, 1] * X1 * X2 + P[1, 1] * X2**2
rho = np.exp(-0.5 * q) / (2 * math.pi * math.sqrt(np.linalg.det(S)))
rho /= rho.sum() * g.dx * g.dx
xbar, w = 0.7, 0.15
out = collapse_density(rho, g, xbar, w, axis=0)
print("mass:", out.sum() * g.dx * g.dx)
marg0 = out.sum(axis=1) * g.dx
win = np.exp(-0.5 * ((g.x - xbar) / w) ** 2)
win /= win.sum() * g.dx
print("marg0 vs window max:", np.max(np.abs(marg0 - win)))
m1 = np.sum(out * X2) * g.dx * g.dx
print("mean x1:", m1, "expect", S[0, 1] / S[0, 0] * xbar)
v1 = np.sum(out * (X2 - m1) ** 2) * g.dx * g.dx
v1_expect = S[1, 1] - S[0, 1] ** 2 / S[0, 0] + (S[0, 1] / S[0, 0]) ** 2 * w**2
print("var x1:", v1, "expect", v1_expect, "gap", abs(v1 - v1_expect))
# axis=1
out1 = collapse_density(rho, g, xbar, w, axis=1)
m0 = np.sum(out1 * X1) * g.dx * g.dx
print("axis1 mean x0:", m0, "expect", S[0, 1] / S[1, 1] * xbar)

# --- collapse_state Gaussian oracle ---
sec("collapse_state oracle")
psi = np.sqrt(rho)
st = WavefunctionState(grid=g, psi=psi.astype(complex), m=1.0, hbar=1.0, t=0.0).normalized()
stc = collapse_state(st, xbar, w, axis=0)
print("norm:", st.grid.integrate(stc.rho).real)
Pp = P + np.diag([1.0 / w**2, 0.0])
Sp = np.linalg.inv(Pp)
mup = Sp[:, 0] * xbar / w**2
rc = stc.rho
wts = rc / rc.sum()
mm = np.array([np.sum(wts * X1), np.sum(wts * X2)])
print("mean:", mm, "expect", mup, "gap", np.max(np.abs(mm - mup)))
cc = stc.cov()
print("cov gap:", np.max(np.abs(cc - Sp)))

# --- GridPositions2D moments ---
sec("GridPositions2D")
pos = GridPositions2D(g.x, rho)
rng = np.random.default_rng(99)
x0, x1 = pos.draw(rng.standard_normal(200_000), rng.standard_normal(200_000))
emp = np.cov(np.stack([x0, x1]))
print("cov emp:", emp, "\n gap:", np.max(np.abs(emp - S)))
print("means:", x0.mean(), x1.mean())

# --- equal-time two_time_expectation ---
sec("equal-time two_time_expectation")
t0 = time.time()
state = TwoParticleGaussian()
plan = MeasurementPlan(0.4, 0.4)
val = two_time_expectation(plan, grid_n=192, n_per_stratum=400, n_off=30_000, seed=7)
cf = float(state.two_time_xx(0.4, 0.4)[0, 1])
print("oracle:", val.oracle, "value:", val.value, "se:", val.stderr)
print("closed form:", cf, "oracle-cf:", val.oracle - cf,
      "sigma:", abs(val.value - val.oracle) / val.stderr)
print("meta:", val.meta, "time:", time.time() - t0)

# off arm equal time
t0 = time.time()
plan_off = MeasurementPlan(0.4, 0.4, collapse=False)
voff = two_time_expectation(plan_off, grid_n=192, n_per_stratum=400, n_off=30_000, seed=7)
print("off value:", voff.value, "se:", voff.stderr,
      "sigma vs cf:", abs(voff.value - cf) / voff.stderr, "time:", time.time() - t0)

# --- light evolving report ---
sec("light run_two_time_report t1=0.2 t2=0.3")
t0 = time.time()
rep = run_two_time_report(MeasurementPlan(0.2, 0.3), grid_n=160,
                          n_per_stratum=300, n_off=30_000, dt=4e-3,
                          slice_stride=5, seed=9)
print("time:", time.time() - t0)
print("oracle_on:", rep.oracle_on, "stoch_on:", rep.stoch_on, "se_on:", rep.se_on,
      "sigma:", abs(rep.stoch_on - rep.oracle_on) / rep.se_on)
print("closed form:", rep.oracle_closed_form, "off flow:", rep.oracle_off_flow)
print("stoch_off:", rep.stoch_off, "se_off:", rep.se_off,
      "sigma vs flow:", abs(rep.stoch_off - rep.oracle_off_flow) / rep.se_off)
print("width_half:", rep.width_half)
print("control:", rep.control)
c = rep.control
print("control sigma:", abs(c["on"] - c["off"]) / math.hypot(c["on_se"], c["off_se"]))
print("on/off separation sigma:",
      abs(rep.stoch_on - rep.stoch_off) / math.hypot(rep.se_on, rep.se_off),
      "oracle gap:", rep.oracle_on - rep.oracle_off_flow)

# --- decoupling light ---
sec("decoupling light")
t0 = time.time()
dec = decoupling_experiment(T=0.5, dt=2e-3, beta=50.0, n_traj=20_000,
                            rec_stride=50, seed=5)
print("time:", time.time() - t0)
print("times:", dec.times)
print("cov12:", dec.cov12)
print("oracle:", dec.cov12_oracle)
print("max_sigma:", dec.max_sigma())
print("var1:", dec.var1, "\nvar1_oracle:", dec.var1_oracle)
print("cov0[0,1]:", TwoParticleGaussian().cov_xx(0.0)[0, 1])

# --- first law light ---
sec("first law light")
t0 = time.time()
fl = run_first_law_check(n_traj=20_000, dt=2.5e-3, T=0.5, n_checkpoints=2,
                         seed=3, states=("ho_ground", "free_gaussian"))
print("time:", time.time() - t0)
for r in fl.rows:
    print(r)
for r in fl.var_rows:
    print(r)
print("max_l1:", fl.max_l1, "max_var_rel_err:", fl.max_var_rel_err)

# --- violation light ---
sec("violation light")
t0 = time.time()
vi = run_law_violation_check(seed=21,
                             white=dict(n_traj=40_000, t_star=0.2, T=0.24),
                             colored=dict(n_traj=30_000))
print("time:", time.time() - t0)
print("qp_force_norm:", vi.qp_force_norm, "expect", 1 / math.sqrt(2))
wk = {k: v for k, v in vi.white.items() if k != "protocol"}
ck = {k: v for k, v in vi.colored.items() if k != "protocol"}
print("white:", wk)
print("colored:", ck)

# --- profile probe light ---
sec("profile probe light")
t0 = time.time()
pp = run_velocity_profile_probe(spread=0.5, beta=50.0, dt=1e-3, T=0.25,
                                n_traj=20_000, seed=31)
print("time:", time.time() - t0)
print("distance:", pp.distance, "combined:", pp.combined_error, "within:", pp.within)
print("moments:", pp.moments)

# --- sweep light nelson_white ---
sec("sweep nelson_white [5,20]")
t0 = time.time()
sw = run_beta_sweep("ho_ground", "nelson_white", [5.0, 20.0], n_traj=20_000,
                    seed=41, bin_span=2.0, n_bins=10)
print("time:", time.time() - t0)
for r in sw.rows:
    print({k: (round(v, 5) if isinstance(v, float) else v) for k, v in r.items()})
print("trends:", sw.trends)
print("notes:", sw.notes)

# --- sweep phase_space ---
sec("sweep phase_space [20]")
t0 = time.time()
sp = run_beta_sweep("ho_ground", "phase_space", [20.0], n_traj=20_000,
                    seed=41, bin_span=2.0, n_bins=10)
print("time:", time.time() - t0)
for r in sp.rows:
    print({k: (round(v, 5) if isinstance(v, float) else v) for k, v in r.items()})
print("notes:", sp.notes)

# --- sweep determinism ---
sec("sweep determinism")
t0 = time.time()
a = run_beta_sweep("ho_ground", "nelson_white", [10.0], n_traj=5_000,
                   seed=17, bin_span=2.0, n_bins=8)
b = run_beta_sweep("ho_ground", "nelson_white", [10.0], n_traj=5_000,
                   seed=17, bin_span=2.0, n_bins=8)
print("time:", time.time() - t0)
print("rows equal:", a.rows == b.rows)
