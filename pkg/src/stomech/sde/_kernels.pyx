# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled ensemble integrators.

Every function here has a numpy twin in `kernels_np.py` with identical
floating-point semantics: noise is pregenerated outside, per-element operation
order matches, and no fast-math is enabled, so the two backends produce
bit-identical records. Time-major output layout (n_rec, n_traj).
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport sqrt

cnp.import_array()


cdef inline double _interp1(const double[:, ::1] tab, Py_ssize_t sl, double x,
                            double x_lo, double inv_dx, Py_ssize_t nx,
                            signed char* esc) nogil:
    cdef double u = (x - x_lo) * inv_dx
    cdef Py_ssize_t i
    if u < 0.0:
        esc[0] = 1
        u = 0.0
    elif u > nx - 1:
        esc[0] = 1
        u = nx - 1
    i = <Py_ssize_t> u
    if i > nx - 2:
        i = nx - 2
    cdef double w = u - i
    return (1.0 - w) * tab[sl, i] + w * tab[sl, i + 1]


def ou_paths(double[::1] a0, double decay, double noise_std, double[:, ::1] z,
             Py_ssize_t rec_stride, double[:, ::1] out_a):
    """Exact-update OU paths; records every rec_stride steps including step 0."""
    cdef Py_ssize_t n = a0.shape[0], n_steps = z.shape[1]
    cdef Py_ssize_t j, k, r
    cdef double a
    with nogil:
        for j in range(n):
            a = a0[j]
            out_a[0, j] = a
            r = 1
            for k in range(n_steps):
                a = decay * a + noise_std * z[j, k]
                if (k + 1) % rec_stride == 0:
                    out_a[r, j] = a
                    r += 1


def white_linear(double[::1] x0, double[::1] c0, double[::1] c1, double eps,
                 double dt, double[:, ::1] z, Py_ssize_t rec_stride,
                 double[:, ::1] out_x):
    """dx = (c0[k] + c1[k] x) dt + eps dW, linear time-dependent drift."""
    cdef Py_ssize_t n = x0.shape[0], n_steps = z.shape[1]
    cdef Py_ssize_t j, k, r
    cdef double x, sq = eps * sqrt(dt)
    with nogil:
        for j in range(n):
            x = x0[j]
            out_x[0, j] = x
            r = 1
            for k in range(n_steps):
                x = x + (c0[k] + c1[k] * x) * dt + sq * z[j, k]
                if (k + 1) % rec_stride == 0:
                    out_x[r, j] = x
                    r += 1


def white_table(double[::1] x0, double[:, ::1] b_tab, double x_lo, double dx,
                Py_ssize_t slice_stride, double eps, double dt, double[:, ::1] z,
                Py_ssize_t rec_stride, double[:, ::1] out_x,
                signed char[::1] out_esc):
    """dx = b(x, t) dt + eps dW with b linearly interpolated from a table.

    b_tab[s] holds the drift over steps [s*slice_stride, (s+1)*slice_stride).
    """
    cdef Py_ssize_t n = x0.shape[0], n_steps = z.shape[1]
    cdef Py_ssize_t nx = b_tab.shape[1], n_slices = b_tab.shape[0]
    cdef Py_ssize_t j, k, r, sl
    cdef double x, b, inv_dx = 1.0 / dx, sq = eps * sqrt(dt)
    cdef signed char esc
    with nogil:
        for j in range(n):
            x = x0[j]
            esc = 0
            out_x[0, j] = x
            r = 1
            for k in range(n_steps):
                sl = k / slice_stride
                if sl > n_slices - 1:
                    sl = n_slices - 1
                b = _interp1(b_tab, sl, x, x_lo, inv_dx, nx, &esc)
                x = x + b * dt + sq * z[j, k]
                if (k + 1) % rec_stride == 0:
                    out_x[r, j] = x
                    r += 1
            out_esc[j] = esc


def colored_linear(double[::1] x0, double[::1] a0, double[::1] c0, double[::1] c1,
                   double eps, double dt, double decay, double noise_std,
                   double[:, ::1] z, Py_ssize_t rec_stride,
                   double[:, ::1] out_x, double[:, ::1] out_a):
    """dx = (c0[k] + c1[k] x) dt + eps A dt; A by exact OU update."""
    cdef Py_ssize_t n = x0.shape[0], n_steps = z.shape[1]
    cdef Py_ssize_t j, k, r
    cdef double x, a
    with nogil:
        for j in range(n):
            x = x0[j]
            a = a0[j]
            out_x[0, j] = x
            out_a[0, j] = a
            r = 1
            for k in range(n_steps):
                x = x + (c0[k] + c1[k] * x) * dt + eps * a * dt
                a = decay * a + noise_std * z[j, k]
                if (k + 1) % rec_stride == 0:
                    out_x[r, j] = x
                    out_a[r, j] = a
                    r += 1


def colored_table(double[::1] x0, double[::1] a0, double[:, ::1] b_tab,
                  double x_lo, double dx, Py_ssize_t slice_stride, double eps,
                  double dt, double decay, double noise_std, double[:, ::1] z,
                  Py_ssize_t rec_stride, double[:, ::1] out_x,
                  double[:, ::1] out_a, signed char[::1] out_esc):
    """dx = b(x, t) dt + eps A dt with tabulated drift; A by exact OU update."""
    cdef Py_ssize_t n = x0.shape[0], n_steps = z.shape[1]
    cdef Py_ssize_t nx = b_tab.shape[1], n_slices = b_tab.shape[0]
    cdef Py_ssize_t j, k, r, sl
    cdef double x, a, b, inv_dx = 1.0 / dx
    cdef signed char esc
    with nogil:
        for j in range(n):
            x = x0[j]
            a = a0[j]
            esc = 0
            out_x[0, j] = x
            out_a[0, j] = a
            r = 1
            for k in range(n_steps):
                sl = k / slice_stride
                if sl > n_slices - 1:
                    sl = n_slices - 1
                b = _interp1(b_tab, sl, x, x_lo, inv_dx, nx, &esc)
                x = x + b * dt + eps * a * dt
                a = decay * a + noise_std * z[j, k]
                if (k + 1) % rec_stride == 0:
                    out_x[r, j] = x
                    out_a[r, j] = a
                    r += 1
            out_esc[j] = esc


def phase_linear(double[:, ::1] x0, double[:, ::1] v0, double[:, ::1] a0,
                 double[:, ::1] f_pre, double[:, ::1] f_post,
                 Py_ssize_t switch_step, double[::1] eps, double dt,
                 double[::1] decay, double[::1] noise_std, double[:, :, ::1] z,
                 Py_ssize_t rec_stride, double[:, :, ::1] out_x,
                 double[:, :, ::1] out_v, double[:, :, ::1] out_a):
    """Phase-space process for p linearly coupled particles.

    dx_i = v_i dt + eps_i A_i dt; dv_i = (F x)_i dt; A_i exact OU. F switches
    from f_pre to f_post at switch_step (decoupling experiments).
    """
    cdef Py_ssize_t n = x0.shape[0], p = x0.shape[1], n_steps = z.shape[1]
    cdef Py_ssize_t j, k, r, i, l
    cdef double[64] x, v, a, acc
    if p > 64:
        raise ValueError("phase_linear supports at most 64 particles")
    with nogil:
        for j in range(n):
            for i in range(p):
                x[i] = x0[j, i]
                v[i] = v0[j, i]
                a[i] = a0[j, i]
                out_x[0, j, i] = x[i]
                out_v[0, j, i] = v[i]
                out_a[0, j, i] = a[i]
            r = 1
            for k in range(n_steps):
                # accelerations from pre-step positions, for every particle,
                # before any state is advanced
                for i in range(p):
                    acc[i] = 0.0
                    if k < switch_step:
                        for l in range(p):
                            acc[i] += f_pre[i, l] * x[l]
                    else:
                        for l in range(p):
                            acc[i] += f_post[i, l] * x[l]
                for i in range(p):
                    x[i] = x[i] + v[i] * dt + eps[i] * a[i] * dt
                    v[i] = v[i] + acc[i] * dt
                    a[i] = decay[i] * a[i] + noise_std[i] * z[j, k, i]
                if (k + 1) % rec_stride == 0:
                    for i in range(p):
                        out_x[r, j, i] = x[i]
                        out_v[r, j, i] = v[i]
                        out_a[r, j, i] = a[i]
                    r += 1


def phase_table(double[::1] x0, double[::1] v0, double[::1] a0,
                double[:, ::1] acc_tab, double x_lo, double dx, double eps,
                double dt, double decay, double noise_std, double[:, ::1] z,
                Py_ssize_t rec_stride, double[:, ::1] out_x, double[:, ::1] out_v,
                double[:, ::1] out_a, signed char[::1] out_esc):
    """Single-particle phase-space process with tabulated acceleration a(x)."""
    cdef Py_ssize_t n = x0.shape[0], n_steps = z.shape[1]
    cdef Py_ssize_t nx = acc_tab.shape[1]
    cdef Py_ssize_t j, k, r
    cdef double x, v, a, acc, inv_dx = 1.0 / dx
    cdef signed char esc
    with nogil:
        for j in range(n):
            x = x0[j]
            v = v0[j]
            a = a0[j]
            esc = 0
            out_x[0, j] = x
            out_v[0, j] = v
            out_a[0, j] = a
            r = 1
            for k in range(n_steps):
                acc = _interp1(acc_tab, 0, x, x_lo, inv_dx, nx, &esc)
                x = x + v * dt + eps * a * dt
                v = v + acc * dt
                a = decay * a + noise_std * z[j, k]
                if (k + 1) % rec_stride == 0:
                    out_x[r, j] = x
                    out_v[r, j] = v
                    out_a[r, j] = a
                    r += 1
            out_esc[j] = esc


cdef inline double _interp2(const float[:, :, ::1] tab, Py_ssize_t sl, double x,
                            double y, double x_lo, double y_lo, double inv_dx,
                            double inv_dy, Py_ssize_t nx, Py_ssize_t ny,
                            signed char* esc) nogil:
    cdef double u = (x - x_lo) * inv_dx
    cdef double w = (y - y_lo) * inv_dy
    cdef Py_ssize_t i, l
    if u < 0.0:
        esc[0] = 1
        u = 0.0
    elif u > nx - 1:
        esc[0] = 1
        u = nx - 1
    if w < 0.0:
        esc[0] = 1
        w = 0.0
    elif w > ny - 1:
        esc[0] = 1
        w = ny - 1
    i = <Py_ssize_t> u
    l = <Py_ssize_t> w
    if i > nx - 2:
        i = nx - 2
    if l > ny - 2:
        l = ny - 2
    cdef double fu = u - i
    cdef double fw = w - l
    # fixed association order, mirrored in the numpy twin
    return ((1.0 - fw) * ((1.0 - fu) * <double> tab[sl, l, i] + fu * <double> tab[sl, l, i + 1])
            + fw * ((1.0 - fu) * <double> tab[sl, l + 1, i] + fu * <double> tab[sl, l + 1, i + 1]))


def white2d_table(double[::1] x0, double[::1] y0, float[:, :, ::1] bx_tab,
                  float[:, :, ::1] by_tab, double x_lo, double y_lo, double dx,
                  double dy, Py_ssize_t slice_stride, double eps, double dt,
                  double[:, :, ::1] z, Py_ssize_t rec_stride,
                  double[:, ::1] out_x, double[:, ::1] out_y,
                  signed char[::1] out_esc):
    """Two-coordinate Nelson diffusion with bilinearly interpolated drift.

    Tables are float32 (memory: n_slices x ny x nx); arithmetic in float64.
    """
    cdef Py_ssize_t n = x0.shape[0], n_steps = z.shape[1]
    cdef Py_ssize_t nx = bx_tab.shape[2], ny = bx_tab.shape[1]
    cdef Py_ssize_t n_slices = bx_tab.shape[0]
    cdef Py_ssize_t j, k, r, sl
    cdef double x, y, bx, by
    cdef double inv_dx = 1.0 / dx, inv_dy = 1.0 / dy, sq = eps * sqrt(dt)
    cdef signed char esc
    with nogil:
        for j in range(n):
            x = x0[j]
            y = y0[j]
            esc = 0
            out_x[0, j] = x
            out_y[0, j] = y
            r = 1
            for k in range(n_steps):
                sl = k / slice_stride
                if sl > n_slices - 1:
                    sl = n_slices - 1
                bx = _interp2(bx_tab, sl, x, y, x_lo, y_lo, inv_dx, inv_dy, nx, ny, &esc)
                by = _interp2(by_tab, sl, x, y, x_lo, y_lo, inv_dx, inv_dy, nx, ny, &esc)
                x = x + bx * dt + sq * z[j, k, 0]
                y = y + by * dt + sq * z[j, k, 1]
                if (k + 1) % rec_stride == 0:
                    out_x[r, j] = x
                    out_y[r, j] = y
                    r += 1
            out_esc[j] = esc
