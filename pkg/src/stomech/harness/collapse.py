"""Measurement collapse and two-time correlators for the entangled pair.

The prescription under test: measuring particle 1 at t1 with outcome xbar
replaces the joint density by the conditional density pinned at xbar (delta
regularized as a narrow Gaussian window), the wavefunction by its windowed
restriction, and the subsequent drift by the one computed from the collapsed
evolution. The two-time correlator E[f(xbar) g(x_other(t2))] then averages
over outcomes xbar ~ rho_1(t1).

Both the oracle and the trajectory arm evaluate the outcome average on the
same node set (per-stratum conditional means of rho_1) with the same
quadrature weights, so discretization of the outer integral cancels in their
comparison. The collapse-off arm runs plain uncollapsed trajectories through
t1 without restarting, which is the alternative the prescription is measured
against: for a drift that depends on the density only through the linear
Schrodinger evolution the two differ; for a density-independent (linear)
diffusion they must agree, and that control is part of the report.
"""

import math
import time
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.special import ndtr, ndtri

from ..constants import COLLAPSE_WIDTH_CELLS, N_STRATA
from ..processes.base import chunk_noise
from ..processes.phase import CorrelatedPhaseSampler, LinearAccel, simulate_phase_space_multi
from ..quantum.catalog import TwoParticleGaussian
from ..quantum.evolve import WavefunctionState, ho_potential, schrodinger_evolve
from ..quantum.grid import Grid2D
from ..quantum.linear import LinearGaussianFlow
from ..quantum.madelung import drift_from_psi
from ..sde import kernels
from ..sde.ensemble import run_ensemble

IDENTITY = ("poly", (0.0, 1.0))
DEGENERATE_MASS = 1e-6


def observable(desc):
    """('poly', coeffs low-to-high) or ('indicator', lo, hi) -> callable."""
    if desc[0] == "poly":
        coeffs = np.asarray(desc[1], dtype=float)
        return lambda x: np.polynomial.polynomial.polyval(np.asarray(x), coeffs)
    if desc[0] == "indicator":
        lo, hi = float(desc[1]), float(desc[2])
        if not lo < hi:
            raise ValueError("indicator needs lo < hi")
        return lambda x: ((np.asarray(x) >= lo) & (np.asarray(x) <= hi)).astype(float)
    raise ValueError(f"unknown observable kind {desc[0]!r}")


@dataclass(frozen=True)
class MeasurementPlan:
    """First measurement on `particle` at t1, second observation at t2.

    t2 = t1 is allowed and degenerates to the single-time correlator, the
    limit in which collapse-on and collapse-off must agree.
    """

    t1: float
    t2: float
    particle: int = 0
    f: tuple = IDENTITY
    g: tuple = IDENTITY
    collapse: bool = True

    def __post_init__(self):
        if self.t1 < 0 or self.t2 < self.t1:
            raise ValueError("need 0 <= t1 <= t2")
        if self.particle not in (0, 1):
            raise ValueError("particle must be 0 or 1")
        observable(self.f), observable(self.g)


def _window(x, center, width):
    w = np.exp(-0.5 * ((x - center) / width) ** 2)
    s = w.sum() * (x[1] - x[0])
    if s <= 0.0:
        # far off-grid outcomes underflow the window to identical zeros
        raise ValueError("degenerate measurement: window has no mass on the grid")
    return w / s


def collapse_density(rho, grid: Grid2D, measured_value: float, width: float,
                     axis: int = 0):
    """rho(x_other | x_measured) times a normalized Gaussian window at the outcome.

    The delta of the idealized reduction is regularized to the given width;
    the conditional is taken at each point under the window, which keeps the
    Gaussian conditioning identities exact at finite width.
    """
    rho = np.asarray(rho, dtype=float)
    mass = rho.sum() * grid.dx * grid.dx
    if abs(mass - 1.0) > 1e-3:
        raise ValueError(f"joint density not normalized: mass {mass:.6f}")
    x = grid.x
    win = _window(x, measured_value, width)
    marg = rho.sum(axis=1 - axis) * grid.dx
    if float(np.sum(win * marg) * grid.dx) < DEGENERATE_MASS:
        raise ValueError("degenerate measurement: no mass under the window")
    with np.errstate(divide="ignore", invalid="ignore"):
        if axis == 0:
            cond = rho / marg[:, None]
            out = np.where(np.isfinite(cond), cond, 0.0) * win[:, None]
        else:
            cond = rho / marg[None, :]
            out = np.where(np.isfinite(cond), cond, 0.0) * win[None, :]
    out /= out.sum() * grid.dx * grid.dx
    return out


def collapse_state(state: WavefunctionState, measured_value: float, width: float,
                   axis: int = 0) -> WavefunctionState:
    """Restrict psi to the outcome window and renormalize.

    |psi_m|^2 is the windowed joint density, which differs from
    collapse_density by the in-window tilt of the measured marginal, a
    second-order effect in the width; the width-stability column of the
    report is the check on both regularizations.
    """
    x = state.grid.x
    amp = np.sqrt(_window(x, measured_value, width))
    psi = state.psi * (amp[:, None] if axis == 0 else amp[None, :])
    norm2 = float(state.grid.integrate(np.abs(psi) ** 2).real)
    if norm2 < DEGENERATE_MASS:
        raise ValueError("degenerate measurement: no mass under the window")
    return replace(state, psi=psi / math.sqrt(norm2))


class GridPositions2D:
    """Inverse-CDF sampler for a 2-D grid density.

    Coordinate 0 from its marginal, coordinate 1 from the conditional
    quantile interpolated between neighboring columns, all as deterministic
    functions of two standard normals.
    """

    def __init__(self, x: np.ndarray, rho: np.ndarray):
        rho = np.maximum(np.asarray(rho, dtype=float), 0.0)
        if rho.sum() == 0:
            raise ValueError("density is identically zero")
        self._x = np.asarray(x, dtype=float)
        self._dx = float(x[1] - x[0])
        self._xe = np.concatenate((x - 0.5 * self._dx, [x[-1] + 0.5 * self._dx]))
        p1 = rho.sum(axis=1)
        cdf = np.cumsum(p1)
        self._m_edges = np.concatenate(([0.0], cdf / cdf[-1]))
        c = np.cumsum(rho, axis=1)
        tot = c[:, -1:].copy()
        empty = tot[:, 0] <= 0
        if empty.any():
            # borrow the nearest populated row: an empty row can still enter
            # through interpolation at the support edge, and a flat ramp
            # there would scatter samples across the whole void
            vidx = np.flatnonzero(~empty)
            pos = np.searchsorted(vidx, np.flatnonzero(empty))
            left = vidx[np.clip(pos - 1, 0, len(vidx) - 1)]
            right = vidx[np.clip(pos, 0, len(vidx) - 1)]
            rows = np.flatnonzero(empty)
            near = np.where(np.abs(rows - left) <= np.abs(rows - right), left, right)
            c[rows] = c[near]
            tot[rows] = tot[near]
        self._cond = np.concatenate((np.zeros((len(x), 1)), c / tot), axis=1)

    def draw(self, z0: np.ndarray, z1: np.ndarray):
        u0, u1 = ndtr(z0), ndtr(z1)
        x0 = np.interp(u0, self._m_edges, self._xe)
        s = np.clip((x0 - self._x[0]) / self._dx, 0.0, len(self._x) - 1.0)
        i0 = np.minimum(s.astype(int), len(self._x) - 2)
        frac = s - i0
        x1 = (1.0 - frac) * self._quantile(i0, u1) + frac * self._quantile(i0 + 1, u1)
        return x0, x1

    def _quantile(self, rows, u):
        E = self._cond[rows]
        j = np.clip(np.sum(E <= u[:, None], axis=1) - 1, 0, E.shape[1] - 2)
        e0 = np.take_along_axis(E, j[:, None], axis=1)[:, 0]
        e1 = np.take_along_axis(E, (j + 1)[:, None], axis=1)[:, 0]
        with np.errstate(invalid="ignore", divide="ignore"):
            frac = np.where(e1 > e0, (u - e0) / (e1 - e0), 0.5)
        return self._xe[j] + frac * self._dx


class PairPositions:
    """Exact sampler for a 2-D Gaussian: x = mean + L z."""

    def __init__(self, mean, cov):
        self.mean = np.asarray(mean, dtype=float)
        self.chol = np.linalg.cholesky(np.asarray(cov, dtype=float))

    def draw(self, z0, z1):
        z = np.stack([z0, z1], axis=1)
        x = self.mean[None, :] + z @ self.chol.T
        return np.ascontiguousarray(x[:, 0]), np.ascontiguousarray(x[:, 1])


class _Swapped:
    """Reverse the coordinate order of a pair sampler."""

    def __init__(self, base):
        self.base = base

    def draw(self, z0, z1):
        a, b = self.base.draw(z0, z1)
        return b, a


class PairWhiteBuilder:
    """Two-coordinate white Nelson diffusion with tabulated drift slices."""

    kind = "nelson_white_pair"
    record_fields = ("x1", "x2")
    n_particles = 1  # fields are scalar per trajectory
    n_components = 2
    n_init = 1

    def __init__(self, tables, grid: Grid2D, positions, eps: float, dt: float,
                 n_steps: int, rec_stride: int, slice_stride: int):
        self.bx, self.by = tables
        self.grid = grid
        self.positions = positions
        self.eps = eps
        self.dt = dt
        self.n_steps = n_steps
        self.rec_stride = rec_stride
        self.slice_stride = slice_stride
        self.meta = {"eps": eps, "n_slices": len(self.bx)}

    def init_chunk(self, ids, seed):
        init, z = chunk_noise(ids, seed, 2, self.n_init, self.n_steps)
        x1, x2 = self.positions.draw(init[:, 0, 0], init[:, 1, 0])
        return {"x1": x1, "x2": x2}, z

    def run_chunk(self, state0, z, outs, esc):
        g = self.grid
        kernels.white2d_table(state0["x1"], state0["x2"], self.bx, self.by,
                              g.x_lo, g.x_lo, g.dx, g.dx, self.slice_stride,
                              self.eps, self.dt, z, self.rec_stride,
                              outs["x1"], outs["x2"], esc)


PULLBACK_RATE = 8.0


def _drift_tables_from_states(states, slice_stride):
    """Midpoint-averaged float32 drift tables from recorded wavefunctions.

    Slice s of the kernel covers steps [s*stride, (s+1)*stride); averaging
    the drifts at its two bounding snapshots is second-order accurate in the
    slice width. Kernel table layout is [slice, coord2, coord1].

    Outside the numerical support of rho the drift is replaced by a linear
    pull toward the density mean. The hard node-repulsion fill would leave
    hard-underflow cells with no force at all, and a tail straggler parked
    there just diffuses off the grid; a smooth pull returns it instead and
    perturbs no cell the density can actually reach.
    """
    n_slices = len(states) - 1
    st0 = states[0]
    n = st0.grid.n
    X1, X2 = st0.grid.mesh()
    bx = np.empty((n_slices, n, n), dtype=np.float32)
    by = np.empty((n_slices, n, n), dtype=np.float32)
    prev = None
    for s, st in enumerate(states):
        b1, mask = drift_from_psi(st.psi, st.grid.dx, st.m, st.hbar, axis=0)
        b2, _ = drift_from_psi(st.psi, st.grid.dx, st.m, st.hbar, axis=1)
        rho = st.rho
        w = rho / rho.sum()
        c1, c2 = float((w * X1).sum()), float((w * X2).sum())
        b1 = np.where(mask, b1, -PULLBACK_RATE * (X1 - c1))
        b2 = np.where(mask, b2, -PULLBACK_RATE * (X2 - c2))
        cur = (b1.T, b2.T)
        if prev is not None:
            bx[s - 1] = 0.5 * (prev[0] + cur[0])
            by[s - 1] = 0.5 * (prev[1] + cur[1])
        prev = cur
    return bx, by


def _drift_tables_linear(bmat_of_t, grid: Grid2D, t_lo: float, dt: float,
                         n_steps: int, slice_stride: int):
    """Tables for an exactly linear drift b(x, t) = B(t) x (midpoint in time).

    Bilinear interpolation is exact on a linear function, so these tables
    reproduce the analytic drift to round-off inside the grid.
    """
    n_slices = max(1, math.ceil(n_steps / slice_stride))
    X1, X2 = grid.mesh()
    bx = np.empty((n_slices, grid.n, grid.n), dtype=np.float32)
    by = np.empty((n_slices, grid.n, grid.n), dtype=np.float32)
    for s in range(n_slices):
        t_mid = t_lo + (s + 0.5) * slice_stride * dt
        B = bmat_of_t(t_mid)
        bx[s] = (B[0, 0] * X1 + B[0, 1] * X2).T
        by[s] = (B[1, 0] * X1 + B[1, 1] * X2).T
    return bx, by


def _strata_nodes(sigma: float, mu: float, n_nodes: int,
                  tail: float = 3.8) -> np.ndarray:
    """Outcome nodes: equal-mass conditional means plus two tail anchors.

    The inner nodes are the per-stratum conditional means of the Gaussian
    marginal; the anchors extend the interpolation range so that clamping
    beyond the last node biases quadratic integrands by < 2e-4.
    """
    S = n_nodes - 2
    edges = ndtri(np.linspace(0.0, 1.0, S + 1))
    phi = np.exp(-0.5 * edges**2) / math.sqrt(2.0 * math.pi)
    phi[0] = phi[-1] = 0.0
    inner = mu + sigma * (phi[:-1] - phi[1:]) * S
    return np.concatenate(([mu - tail * sigma], inner, [mu + tail * sigma]))


def _node_weights(nodes, x_fine, rho1_fine, f_fn):
    """Quadrature weights c_s with sum_s c_s v(nodes_s) ~ E[f(X) v(X)].

    v is linearly interpolated between nodes and clamped outside, so the
    weights are integrals of rho1 * f against the hat functions; the same
    weights serve the oracle and the trajectory arm.
    """
    dx = x_fine[1] - x_fine[0]
    base = rho1_fine * f_fn(x_fine) * dx
    S = len(nodes)
    c = np.zeros(S)
    for s in range(S):
        lam = np.zeros(S)
        lam[s] = 1.0
        c[s] = float(np.sum(base * np.interp(x_fine, nodes, lam)))
    return c


@dataclass
class TwoTimeValue:
    oracle: float
    value: float
    stderr: float
    meta: dict = field(default_factory=dict)


@dataclass
class TwoTimeReport:
    """Everything criterion-level: both arms, the control, width stability."""
    t1: float
    t2: float
    width: float
    grid_n: int
    n_strata: int
    n_per_stratum: int
    n_off: int
    dt: float
    seed: int
    oracle_on: float = 0.0
    stoch_on: float = 0.0
    se_on: float = 0.0
    stoch_off: float = 0.0
    se_off: float = 0.0
    oracle_off_flow: float | None = None
    oracle_closed_form: float | None = None
    width_half: dict = field(default_factory=dict)
    control: dict = field(default_factory=dict)
    runtime_s: float = 0.0

    def to_dict(self):
        return {k: getattr(self, k) for k in (
            "t1", "t2", "width", "grid_n", "n_strata", "n_per_stratum",
            "n_off", "dt", "seed", "oracle_on", "stoch_on", "se_on",
            "stoch_off", "se_off", "oracle_off_flow", "oracle_closed_form",
            "width_half", "control", "runtime_s")}


def _pair_grid(state: TwoParticleGaussian, plan: MeasurementPlan, grid_n: int,
               width_cells: float, tail: float = 3.8):
    """Grid sized for the collapsed packets, not just the base state.

    Restricting the measured coordinate to width w injects momentum
    sigma_p ~ hbar/(2w), and the oscillator rotates that into position
    spread sigma_p sin(w(t2-t1))/(m w). The span must hold the outermost
    outcome node (swung through its full phase-space orbit) plus five
    standard deviations of that spread; since w is tied to the cell size,
    the span is a fixed point, found by iteration.
    """
    sig0 = math.sqrt(max(float(np.max(np.diag(state.cov_xx(t))))
                         for t in np.linspace(0.0, math.pi / state.omega, 17)))
    sig1 = math.sqrt(state.cov_xx(plan.t1)[plan.particle, plan.particle])
    orbit = 1.45 * tail * sig1
    s = math.sin(min(state.omega * (plan.t2 - plan.t1), 0.5 * math.pi))
    half = 7.0 * sig0
    for _ in range(12):
        w = width_cells * 2.0 * half / grid_n
        kick = 1.25 * state.hbar / (2.0 * state.m * w) * s / (state.m * state.omega)
        half = 0.5 * half + 0.5 * (orbit + 5.0 * math.hypot(sig0, kick))
    return Grid2D(-half, half, grid_n)


def _analytic_pair_state(state, grid, t):
    X1, X2 = grid.mesh()
    psi = state.psi(X1, X2, t)
    return WavefunctionState(grid=grid, psi=psi, m=state.m, hbar=state.hbar, t=t)


def _marginal_mean(state2d: WavefunctionState, g_fn, axis):
    x, marg = state2d.marginal(axis=axis)
    return float(np.sum(marg * g_fn(x)) * state2d.grid.dx)


SDE_REFINE = 4  # SDE substeps per PDE step; collapsed packets are stiff
                # (drift slope ~ hbar/2m w^2) and the Euler weak error at the
                # PDE step size is visible against the oracle


def _evolve_tables(psi_m, U, dt, T, slice_stride):
    states = schrodinger_evolve(psi_m, U, dt, T, record_every=slice_stride)
    tables = _drift_tables_from_states(states, slice_stride)
    return states[-1], tables


def _run_pair(tables, grid, positions, eps, dt, n_steps, slice_stride, seed,
              n_traj, n_threads):
    # integrate on a finer step than the drift tables are sliced at
    r = SDE_REFINE
    b = PairWhiteBuilder(tables, grid, positions, eps, dt / r, n_steps * r,
                         rec_stride=max(1, n_steps * r),
                         slice_stride=slice_stride * r)
    return run_ensemble(b, n_traj, seed, n_threads=n_threads)


def _sample_only(positions, n_traj, seed):
    init, _ = chunk_noise(np.arange(n_traj), seed, 2, 1, 0)
    return positions.draw(init[:, 0, 0], init[:, 1, 0])


def _collapsed_arm(state, plan, grid, U, width, nodes, weights, dt, n_per,
                   slice_stride, seed, n_threads, want_stochastic=True):
    """Oracle and trajectory values of the collapsed two-time correlator."""
    g_fn = observable(plan.g)
    axis = plan.particle
    psi_t1 = _analytic_pair_state(state, grid, plan.t1).normalized()
    eps = math.sqrt(state.hbar / state.m)
    n_steps = round((plan.t2 - plan.t1) / dt)
    oracle_vals = np.zeros(len(nodes))
    stoch_vals = np.zeros(len(nodes))
    stoch_ses = np.zeros(len(nodes))
    for s, xbar in enumerate(nodes):
        psi_m = collapse_state(psi_t1, xbar, width, axis=axis)
        if n_steps > 0:
            final, tables = _evolve_tables(psi_m, U, dt, plan.t2 - plan.t1,
                                           slice_stride)
        else:
            final, tables = psi_m, None
        oracle_vals[s] = _marginal_mean(final, g_fn, axis=1 - axis)
        if not want_stochastic:
            continue
        rho_m = np.abs(psi_m.psi) ** 2
        rho_m = rho_m if axis == 0 else rho_m.T
        pos = GridPositions2D(grid.x, rho_m)
        if axis == 1:
            pos = _Swapped(pos)
        if n_steps > 0:
            ens = _run_pair(tables, grid, pos, eps, dt, n_steps, slice_stride,
                            seed + s, n_per, n_threads)
            xg = ens.at(ens.times[-1], "x2" if axis == 0 else "x1")
        else:
            x1, x2 = _sample_only(pos, n_per, seed + s)
            xg = x2 if axis == 0 else x1
        gv = g_fn(xg)
        stoch_vals[s] = float(gv.mean())
        stoch_ses[s] = float(gv.std(ddof=1) / math.sqrt(len(gv)))
    oracle = float(np.sum(weights * oracle_vals))
    stoch = float(np.sum(weights * stoch_vals))
    se = float(np.sqrt(np.sum(weights**2 * stoch_ses**2)))
    return oracle, stoch, se


def _off_arm(state, plan, grid, dt, n_off, slice_stride, seed, n_threads):
    """Uncollapsed trajectories straight through t1; f at t1, g at t2."""
    f_fn, g_fn = observable(plan.f), observable(plan.g)
    axis = plan.particle
    eps = math.sqrt(state.hbar / state.m)
    n_steps = round((plan.t2 - plan.t1) / dt)
    positions = PairPositions((0.0, 0.0), state.cov_xx(plan.t1))
    if n_steps > 0:
        tables = _drift_tables_linear(state.drift_matrix, grid, plan.t1, dt,
                                      n_steps, slice_stride)
        ens = _run_pair(tables, grid, positions, eps, dt, n_steps, slice_stride,
                        seed, n_off, n_threads)
        xm0 = ens.at(0.0, "x1" if axis == 0 else "x2")
        xg1 = ens.at(ens.times[-1], "x2" if axis == 0 else "x1")
    else:
        x1, x2 = _sample_only(positions, n_off, seed)
        xm0 = x1 if axis == 0 else x2
        xg1 = x2 if axis == 0 else x1
    prod = f_fn(xm0) * g_fn(xg1)
    return float(prod.mean()), float(prod.std(ddof=1) / math.sqrt(len(prod)))


def _control_arms(state, plan, grid, width, dt, n_strata, n_per, n_off,
                  slice_stride, seed, n_threads):
    """Same pipeline on a density-independent linear diffusion b = -omega x.

    Collapse can only matter through the density dependence of the drift, so
    on this control the on and off correlators must coincide; their measured
    difference calibrates the pipeline itself.
    """
    w, m, hbar = state.omega, state.m, state.hbar
    eps2 = hbar / m
    f_fn, g_fn = observable(plan.f), observable(plan.g)
    axis = plan.particle

    def cov_c(t):
        decay = math.exp(-2.0 * w * t)
        return decay * state.cov_xx(0.0) + (eps2 / (2.0 * w)) * (1.0 - decay) * np.eye(2)

    X1, X2 = grid.mesh()
    S1 = cov_c(plan.t1)
    Pm = np.linalg.inv(S1)
    q = Pm[0, 0] * X1**2 + 2 * Pm[0, 1] * X1 * X2 + Pm[1, 1] * X2**2
    rho_t1 = np.exp(-0.5 * q) / (2.0 * math.pi * math.sqrt(np.linalg.det(S1)))
    sig1 = math.sqrt(S1[axis, axis])
    nodes = _strata_nodes(sig1, 0.0, n_strata)
    x_marg = rho_t1.sum(axis=1 - axis) * grid.dx
    weights = _node_weights(nodes, grid.x, x_marg, f_fn)

    n_steps = round((plan.t2 - plan.t1) / dt)
    B = -w * np.eye(2)
    tables = _drift_tables_linear(lambda t: B, grid, plan.t1, dt,
                                  max(n_steps, 1), slice_stride)
    vals = np.zeros(n_strata)
    ses = np.zeros(n_strata)
    for s, xbar in enumerate(nodes):
        rho_m = collapse_density(rho_t1, grid, xbar, width, axis=axis)
        rho_m = rho_m if axis == 0 else rho_m.T
        pos = GridPositions2D(grid.x, rho_m)
        if axis == 1:
            pos = _Swapped(pos)
        if n_steps > 0:
            ens = _run_pair(tables, grid, pos, math.sqrt(eps2), dt, n_steps,
                            slice_stride, seed + s, n_per, n_threads)
            xg = ens.at(ens.times[-1], "x2" if axis == 0 else "x1")
        else:
            x1, x2 = _sample_only(pos, n_per, seed + s)
            xg = x2 if axis == 0 else x1
        gv = g_fn(xg)
        vals[s] = float(gv.mean())
        ses[s] = float(gv.std(ddof=1) / math.sqrt(len(gv)))
    on = float(np.sum(weights * vals))
    on_se = float(np.sqrt(np.sum(weights**2 * ses**2)))

    positions = PairPositions((0.0, 0.0), S1)
    if n_steps > 0:
        ens = _run_pair(tables, grid, positions, math.sqrt(eps2), dt, n_steps,
                        slice_stride, seed + n_strata, n_off, n_threads)
        xm0 = ens.at(0.0, "x1" if axis == 0 else "x2")
        xg1 = ens.at(ens.times[-1], "x2" if axis == 0 else "x1")
    else:
        x1, x2 = _sample_only(positions, n_off, seed + n_strata)
        xm0, xg1 = (x1, x2) if axis == 0 else (x2, x1)
    prod = f_fn(xm0) * g_fn(xg1)
    return {"on": on, "on_se": on_se, "off": float(prod.mean()),
            "off_se": float(prod.std(ddof=1) / math.sqrt(len(prod)))}


def _prepare(state, plan, grid_n, width_cells):
    grid = _pair_grid(state, plan, grid_n, width_cells)
    width = width_cells * grid.dx
    U = ho_potential(grid, state.omega, state.m)
    sig1 = math.sqrt(state.cov_xx(plan.t1)[plan.particle, plan.particle])
    nodes = _strata_nodes(sig1, 0.0, N_STRATA)
    X1, X2 = grid.mesh()
    rho1 = state.rho(X1, X2, plan.t1).sum(axis=1 - plan.particle) * grid.dx
    weights = _node_weights(nodes, grid.x, rho1, observable(plan.f))
    return grid, width, U, nodes, weights


def two_time_expectation(plan: MeasurementPlan, state: TwoParticleGaussian | None = None,
                         grid_n: int = 384, width_cells: float = COLLAPSE_WIDTH_CELLS,
                         n_per_stratum: int = 2000, n_off: int = 200_000,
                         dt: float = 2e-3, slice_stride: int = 5, seed: int = 51,
                         n_threads: int = 1) -> TwoTimeValue:
    """(collapsed oracle value, trajectory value) for one measurement plan.

    The trajectory value follows plan.collapse: restarted from the collapsed
    density with collapsed-evolution drifts when on, or run straight through
    the measurement time when off. The oracle is always the collapsed one.
    """
    state = state or TwoParticleGaussian()
    grid, width, U, nodes, weights = _prepare(state, plan, grid_n, width_cells)
    oracle, stoch, se = _collapsed_arm(state, plan, grid, U, width, nodes,
                                       weights, dt, n_per_stratum, slice_stride,
                                       seed, n_threads,
                                       want_stochastic=plan.collapse)
    if not plan.collapse:
        stoch, se = _off_arm(state, plan, grid, dt, n_off, slice_stride,
                             seed, n_threads)
    return TwoTimeValue(oracle=oracle, value=stoch, stderr=se,
                        meta={"width": width, "grid_n": grid_n,
                              "n_strata": len(nodes), "collapse": plan.collapse})


def run_two_time_report(plan: MeasurementPlan, state: TwoParticleGaussian | None = None,
                        grid_n: int = 384, width_cells: float = COLLAPSE_WIDTH_CELLS,
                        n_per_stratum: int = 2000, n_off: int = 200_000,
                        dt: float = 2e-3, slice_stride: int = 5, seed: int = 51,
                        n_threads: int = 1, with_control: bool = True,
                        with_width_check: bool = True) -> TwoTimeReport:
    """Full criterion bundle: both arms, linear control, width stability."""
    t0 = time.time()
    state = state or TwoParticleGaussian()
    grid, width, U, nodes, weights = _prepare(state, plan, grid_n, width_cells)
    rep = TwoTimeReport(t1=plan.t1, t2=plan.t2, width=width, grid_n=grid_n,
                        n_strata=len(nodes), n_per_stratum=n_per_stratum,
                        n_off=n_off, dt=dt, seed=seed)
    rep.oracle_on, rep.stoch_on, rep.se_on = _collapsed_arm(
        state, plan, grid, U, width, nodes, weights, dt, n_per_stratum,
        slice_stride, seed, n_threads)
    rep.stoch_off, rep.se_off = _off_arm(state, plan, grid, dt, n_off,
                                         slice_stride, seed + 1000, n_threads)
    if plan.f == IDENTITY and plan.g == IDENTITY:
        i, j = plan.particle, 1 - plan.particle
        rep.oracle_closed_form = float(state.two_time_xx(plan.t1, plan.t2)[i, j])
        eps2 = state.hbar / state.m
        flow = LinearGaussianFlow(state.drift_matrix, eps2 * np.eye(2), dt=1e-3)
        rep.oracle_off_flow = float(
            flow.two_time(state.cov_xx(0.0), 0.0, plan.t1, plan.t2)[i, j])
    if with_width_check:
        o2, s2, e2 = _collapsed_arm(state, plan, grid, U, 0.5 * width, nodes,
                                    weights, dt, n_per_stratum, slice_stride,
                                    seed + 2000, n_threads)
        rep.width_half = {"oracle_on": o2, "stoch_on": s2, "se_on": e2,
                          "width": 0.5 * width}
    if with_control:
        rep.control = _control_arms(state, plan, grid, width, dt, len(nodes),
                                    n_per_stratum, n_off, slice_stride,
                                    seed + 3000, n_threads)
    rep.runtime_s = time.time() - t0
    return rep


@dataclass
class DecouplingReport:
    times: np.ndarray
    cov12: np.ndarray
    cov12_se: np.ndarray
    cov12_oracle: np.ndarray
    var1: np.ndarray
    var1_oracle: np.ndarray
    beta: float
    n_traj: int
    seed: int

    def max_sigma(self) -> float:
        return float(np.max(np.abs(self.cov12 - self.cov12_oracle) /
                            np.maximum(self.cov12_se, 1e-300)))

    def to_dict(self):
        return {"times": self.times.tolist(), "cov12": self.cov12.tolist(),
                "cov12_se": self.cov12_se.tolist(),
                "cov12_oracle": self.cov12_oracle.tolist(),
                "var1": self.var1.tolist(),
                "var1_oracle": self.var1_oracle.tolist(),
                "beta": self.beta, "n_traj": self.n_traj, "seed": self.seed}


def decoupling_experiment(state: TwoParticleGaussian | None = None,
                          T: float = 3.0, dt: float = 1e-3, beta: float = 100.0,
                          n_traj: int = 100_000, rec_stride: int = 250,
                          spread: float = 0.0, seed: int = 61,
                          n_threads: int = 1) -> DecouplingReport:
    """Independently driven, dynamically decoupled pair from an entangled start.

    Interactions are off for t >= 0; each particle follows its own oscillator
    with its own noise stream. The initial correlation nevertheless persists
    and rotates, tracked against the exact linear-system covariance.
    """
    state = state or TwoParticleGaussian()
    w2 = state.omega**2
    F = np.diag([-w2, -w2])
    accel = LinearAccel(f_pre=F, f_post=F, switch_step=0)
    cov0 = state.cov_xx(0.0)
    B0 = state.drift_matrix(0.0)
    sampler = CorrelatedPhaseSampler(mean=np.zeros(2),
                                     chol=np.linalg.cholesky(cov0),
                                     b0=B0, spread=spread)
    eps = math.sqrt(state.hbar / state.m)
    ens = simulate_phase_space_multi(accel, sampler, eps=eps, beta=beta, dt=dt,
                                     T=T, seed=seed, n_traj=n_traj,
                                     rec_stride=rec_stride, n_threads=n_threads)
    x = ens.x  # (n_rec, n, 2)
    d1 = x[:, :, 0] - x[:, :, 0].mean(axis=1, keepdims=True)
    d2 = x[:, :, 1] - x[:, :, 1].mean(axis=1, keepdims=True)
    prod = d1 * d2
    cov12 = prod.mean(axis=1)
    cov12_se = prod.std(axis=1, ddof=1) / math.sqrt(x.shape[1])
    var1 = x[:, :, 0].var(axis=1, ddof=1)

    # exact reference: joint linear system (x1, x2, v1, v2, A1, A2)
    Z = np.zeros((2, 2))
    I = np.eye(2)
    Bfull = np.block([[Z, I, eps * I], [F, Z, Z], [Z, Z, -beta * I]])
    D = np.zeros((6, 6))
    D[4, 4] = D[5, 5] = beta**2
    flow = LinearGaussianFlow(Bfull, D, dt=min(dt, 0.1 / beta))
    S0 = np.zeros((6, 6))
    S0[:2, :2] = cov0
    S0[:2, 2:4] = cov0 @ B0.T
    S0[2:4, :2] = B0 @ cov0
    S0[2:4, 2:4] = B0 @ cov0 @ B0.T + spread**2 * np.eye(2)
    S0[4, 4] = S0[5, 5] = beta / 2.0
    cov12_oracle = np.empty(len(ens.times))
    var1_oracle = np.empty(len(ens.times))
    S = S0
    t_prev = 0.0
    for k, t in enumerate(ens.times):
        S = flow.propagate(S, t_prev, t) if t > t_prev else S
        t_prev = t
        cov12_oracle[k] = S[0, 1]
        var1_oracle[k] = S[0, 0]
    return DecouplingReport(times=ens.times, cov12=cov12, cov12_se=cov12_se,
                            cov12_oracle=cov12_oracle, var1=var1,
                            var1_oracle=var1_oracle, beta=beta, n_traj=n_traj,
                            seed=seed)
