# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled closed-loop RK4 loop.

Mirrors ``seeker._pykernel`` operation for operation; see that module for
the argument layout.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport exp, sin, sqrt, floor, isfinite

cnp.import_array()

DEF NX = 7


cdef inline double field_eval(int code, const double[::1] prm, double x, double y) noexcept nogil:
    cdef double dx, dy, s, u, out
    cdef Py_ssize_t i, n
    if code == 0:
        return prm[0]
    elif code == 1:
        return prm[0] * x + prm[1] * y + prm[2]
    elif code == 2:
        dx = x - prm[1]
        dy = y - prm[2]
        return prm[0] * (dx * dx + dy * dy) + prm[3]
    elif code == 3:
        s = x * x + y * y
        u = s - prm[4] * prm[4]
        return -prm[0] * exp(-s / prm[1]) - prm[2] * exp(-prm[3] * u * u)
    else:
        out = 0.0
        n = prm.shape[0] // 4
        for i in range(n):
            dx = x - prm[4 * i + 1]
            dy = y - prm[4 * i + 2]
            out = out + prm[4 * i] * exp(-(dx * dx + dy * dy) / (2.0 * prm[4 * i + 3] * prm[4 * i + 3]))
        return out


cdef inline double signal_eval(int code, const double[::1] sp, const double[::1] table,
                               double t, double t_mid) noexcept nogil:
    cdef Py_ssize_t idx
    if code == 0:
        return 0.0
    elif code == 1:
        return sp[0]
    elif code == 2:
        return sp[0] * sin(sp[1] * t + sp[2])
    else:
        idx = <Py_ssize_t> floor(t_mid / sp[3])
        if idx < 0:
            idx = 0
        if idx >= table.shape[0]:
            idx = table.shape[0] - 1
        return table[idx]


cdef inline int rhs(double t, double t_mid, double* x, double* out,
                    int fcode, const double[::1] fprm, const double* vp,
                    const int* scodes, const double[:, ::1] sprm,
                    const double[::1] tab_r, const double[::1] tab_s, const double[::1] tab_t) noexcept nogil:
    cdef double m = vp[0], J = vp[1], k = vp[2], kappa = vp[3], eps = vp[4]
    cdef double lam = vp[5], tau = vp[6], h = vp[7], r = vp[8]
    cdef double o1 = x[2], o2 = x[3], v = x[4], w = x[5], eta = x[6]
    cdef double y_hat, u_t, dr, dt_
    cdef int i
    y_hat = field_eval(fcode, fprm, x[0] + r * o1, x[1] + r * o2) + signal_eval(scodes[1], sprm[1], tab_s, t, t_mid)
    dr = signal_eval(scodes[0], sprm[0], tab_r, t, t_mid)
    dt_ = signal_eval(scodes[2], sprm[2], tab_t, t, t_mid)
    u_t = -lam * (y_hat - eta)
    out[0] = v * o1
    out[1] = v * o2
    out[2] = -w * o2
    out[3] = w * o1
    out[4] = (-(k / eps) * v + u_t + dt_) / m
    out[5] = (-kappa * w + tau + dr) / J
    out[6] = eps * h * (y_hat - eta)
    for i in range(NX):
        if not isfinite(out[i]):
            return 0
    return 1


def run_closed_loop(int field_code, const double[::1] field_params, const double[::1] vp_arr,
                    int[::1] sig_codes, const double[:, ::1] sig_params,
                    const double[::1] tab_r, const double[::1] tab_s, const double[::1] tab_t,
                    const double[::1] x0, double t0, double dt, Py_ssize_t n_steps, Py_ssize_t stride):
    """Integrate the closed loop; returns ``(samples, status, fail_step, fail_stage, last_state)``.

    ``status`` is 0 on success, 1 if a stage produced a non-finite value.
    """
    cdef Py_ssize_t n_samples = n_steps // stride + 1
    samples_np = np.empty((n_samples, NX), dtype=np.float64)
    cdef double[:, ::1] samples = samples_np
    cdef double x[NX]
    cdef double xs[NX]
    cdef double k1[NX]
    cdef double k2[NX]
    cdef double k3[NX]
    cdef double k4[NX]
    cdef double vp[9]
    cdef int scodes[3]
    cdef double t, t_mid, half = 0.5 * dt, sixth = dt / 6.0, nrm
    cdef Py_ssize_t step, i, s_idx = 1
    cdef int status = 0, fail_stage = 0
    cdef Py_ssize_t fail_step = -1

    for i in range(9):
        vp[i] = vp_arr[i]
    for i in range(3):
        scodes[i] = sig_codes[i]
    for i in range(NX):
        x[i] = x0[i]
        samples[0, i] = x[i]

    with nogil:
        for step in range(n_steps):
            t = t0 + step * dt
            t_mid = t + half
            if not rhs(t, t_mid, x, k1, field_code, field_params, vp, scodes, sig_params, tab_r, tab_s, tab_t):
                status = 1; fail_stage = 1; fail_step = step
                break
            for i in range(NX):
                xs[i] = x[i] + half * k1[i]
            if not rhs(t_mid, t_mid, xs, k2, field_code, field_params, vp, scodes, sig_params, tab_r, tab_s, tab_t):
                status = 1; fail_stage = 2; fail_step = step
                break
            for i in range(NX):
                xs[i] = x[i] + half * k2[i]
            if not rhs(t_mid, t_mid, xs, k3, field_code, field_params, vp, scodes, sig_params, tab_r, tab_s, tab_t):
                status = 1; fail_stage = 3; fail_step = step
                break
            for i in range(NX):
                xs[i] = x[i] + dt * k3[i]
            if not rhs(t + dt, t_mid, xs, k4, field_code, field_params, vp, scodes, sig_params, tab_r, tab_s, tab_t):
                status = 1; fail_stage = 4; fail_step = step
                break
            for i in range(NX):
                x[i] = x[i] + sixth * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
            nrm = sqrt(x[2] * x[2] + x[3] * x[3])
            x[2] = x[2] / nrm
            x[3] = x[3] / nrm
            if (step + 1) % stride == 0:
                for i in range(NX):
                    samples[s_idx, i] = x[i]
                s_idx += 1

    last = np.empty(NX, dtype=np.float64)
    for i in range(NX):
        last[i] = x[i]
    return samples_np[:s_idx], status, fail_step, fail_stage, last
