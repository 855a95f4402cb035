"""Numpy fallback for the compiled integrators.

Each function mirrors its `_kernels.pyx` twin operation-for-operation
(same per-element arithmetic order, same casts), so results are bit-identical
across backends. Vectorized over trajectories, stepped in time.
"""

import math

import numpy as np


def _interp1_prep(x, x_lo, inv_dx, nx, esc):
    u = (x - x_lo) * inv_dx
    np.bitwise_or(esc, (u < 0.0) | (u > nx - 1), out=esc)
    u = np.clip(u, 0.0, float(nx - 1))
    i = u.astype(np.intp)
    np.minimum(i, nx - 2, out=i)
    w = u - i
    return i, w


def _interp1(tab_slice, x, x_lo, inv_dx, nx, esc):
    i, w = _interp1_prep(x, x_lo, inv_dx, nx, esc)
    return (1.0 - w) * tab_slice[i] + w * tab_slice[i + 1]


def ou_paths(a0, decay, noise_std, z, rec_stride, out_a):
    n_steps = z.shape[1]
    a = a0.copy()
    out_a[0] = a
    r = 1
    for k in range(n_steps):
        a = decay * a + noise_std * z[:, k]
        if (k + 1) % rec_stride == 0:
            out_a[r] = a
            r += 1


def white_linear(x0, c0, c1, eps, dt, z, rec_stride, out_x):
    n_steps = z.shape[1]
    sq = eps * math.sqrt(dt)
    x = x0.copy()
    out_x[0] = x
    r = 1
    for k in range(n_steps):
        x = x + (c0[k] + c1[k] * x) * dt + sq * z[:, k]
        if (k + 1) % rec_stride == 0:
            out_x[r] = x
            r += 1


def white_table(x0, b_tab, x_lo, dx, slice_stride, eps, dt, z, rec_stride,
                out_x, out_esc):
    n_steps = z.shape[1]
    n_slices, nx = b_tab.shape
    inv_dx = 1.0 / dx
    sq = eps * math.sqrt(dt)
    x = x0.copy()
    esc = np.zeros(x.shape[0], dtype=bool)
    out_x[0] = x
    r = 1
    for k in range(n_steps):
        sl = min(k // slice_stride, n_slices - 1)
        b = _interp1(b_tab[sl], x, x_lo, inv_dx, nx, esc)
        x = x + b * dt + sq * z[:, k]
        if (k + 1) % rec_stride == 0:
            out_x[r] = x
            r += 1
    out_esc[:] = esc.astype(np.int8)


def colored_linear(x0, a0, c0, c1, eps, dt, decay, noise_std, z, rec_stride,
                   out_x, out_a):
    n_steps = z.shape[1]
    x = x0.copy()
    a = a0.copy()
    out_x[0] = x
    out_a[0] = a
    r = 1
    for k in range(n_steps):
        x = x + (c0[k] + c1[k] * x) * dt + eps * a * dt
        a = decay * a + noise_std * z[:, k]
        if (k + 1) % rec_stride == 0:
            out_x[r] = x
            out_a[r] = a
            r += 1


def colored_table(x0, a0, b_tab, x_lo, dx, slice_stride, eps, dt, decay,
                  noise_std, z, rec_stride, out_x, out_a, out_esc):
    n_steps = z.shape[1]
    n_slices, nx = b_tab.shape
    inv_dx = 1.0 / dx
    x = x0.copy()
    a = a0.copy()
    esc = np.zeros(x.shape[0], dtype=bool)
    out_x[0] = x
    out_a[0] = a
    r = 1
    for k in range(n_steps):
        sl = min(k // slice_stride, n_slices - 1)
        b = _interp1(b_tab[sl], x, x_lo, inv_dx, nx, esc)
        x = x + b * dt + eps * a * dt
        a = decay * a + noise_std * z[:, k]
        if (k + 1) % rec_stride == 0:
            out_x[r] = x
            out_a[r] = a
            r += 1
    out_esc[:] = esc.astype(np.int8)


def phase_linear(x0, v0, a0, f_pre, f_post, switch_step, eps, dt, decay,
                 noise_std, z, rec_stride, out_x, out_v, out_a):
    n, p = x0.shape
    if p > 64:
        raise ValueError("phase_linear supports at most 64 particles")
    n_steps = z.shape[1]
    x = x0.copy()
    v = v0.copy()
    a = a0.copy()
    out_x[0] = x
    out_v[0] = v
    out_a[0] = a
    r = 1
    for k in range(n_steps):
        f = f_pre if k < switch_step else f_post
        # acc_i = sum_l F[i,l] x_l from pre-step positions; explicit loop keeps
        # the summation order identical to the compiled kernel
        acc = np.zeros_like(x)
        for i in range(p):
            for l in range(p):
                acc[:, i] += f[i, l] * x[:, l]
        x = x + v * dt + (eps * a) * dt
        v = v + acc * dt
        a = decay * a + noise_std * z[:, k, :]
        if (k + 1) % rec_stride == 0:
            out_x[r] = x
            out_v[r] = v
            out_a[r] = a
            r += 1


def phase_table(x0, v0, a0, acc_tab, x_lo, dx, eps, dt, decay, noise_std, z,
                rec_stride, out_x, out_v, out_a, out_esc):
    n_steps = z.shape[1]
    nx = acc_tab.shape[1]
    inv_dx = 1.0 / dx
    x = x0.copy()
    v = v0.copy()
    a = a0.copy()
    esc = np.zeros(x.shape[0], dtype=bool)
    out_x[0] = x
    out_v[0] = v
    out_a[0] = a
    r = 1
    for k in range(n_steps):
        acc = _interp1(acc_tab[0], x, x_lo, inv_dx, nx, esc)
        x = x + v * dt + (eps * a) * dt
        v = v + acc * dt
        a = decay * a + noise_std * z[:, k]
        if (k + 1) % rec_stride == 0:
            out_x[r] = x
            out_v[r] = v
            out_a[r] = a
            r += 1
    out_esc[:] = esc.astype(np.int8)


def _interp2(tab_slice, x, y, x_lo, y_lo, inv_dx, inv_dy, nx, ny, esc):
    i, fu = _interp1_prep(x, x_lo, inv_dx, nx, esc)
    l, fw = _interp1_prep(y, y_lo, inv_dy, ny, esc)
    t00 = tab_slice[l, i].astype(np.float64)
    t01 = tab_slice[l, i + 1].astype(np.float64)
    t10 = tab_slice[l + 1, i].astype(np.float64)
    t11 = tab_slice[l + 1, i + 1].astype(np.float64)
    return (1.0 - fw) * ((1.0 - fu) * t00 + fu * t01) + fw * ((1.0 - fu) * t10 + fu * t11)


def white2d_table(x0, y0, bx_tab, by_tab, x_lo, y_lo, dx, dy, slice_stride,
                  eps, dt, z, rec_stride, out_x, out_y, out_esc):
    n_steps = z.shape[1]
    n_slices, ny, nx = bx_tab.shape
    inv_dx = 1.0 / dx
    inv_dy = 1.0 / dy
    sq = eps * math.sqrt(dt)
    x = x0.copy()
    y = y0.copy()
    esc = np.zeros(x.shape[0], dtype=bool)
    out_x[0] = x
    out_y[0] = y
    r = 1
    for k in range(n_steps):
        sl = min(k // slice_stride, n_slices - 1)
        bx = _interp2(bx_tab[sl], x, y, x_lo, y_lo, inv_dx, inv_dy, nx, ny, esc)
        by = _interp2(by_tab[sl], x, y, x_lo, y_lo, inv_dx, inv_dy, nx, ny, esc)
        x = x + bx * dt + sq * z[:, k, 0]
        y = y + by * dt + sq * z[:, k, 1]
        if (k + 1) % rec_stride == 0:
            out_x[r] = x
            out_y[r] = y
            r += 1
    out_esc[:] = esc.astype(np.int8)
