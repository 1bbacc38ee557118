"""Pure-Python closed-loop RK4 loop (fallback for the compiled ``_kernel``).

Arguments of :func:`run_closed_loop`:

* ``field_code``, ``field_params``: from :attr:`ScalarField.code` / :meth:`ScalarField.packed`
* ``vp_arr``: ``[m, J, k, kappa, eps, lam, tau_star, h, r]``
* ``sig_codes``: signal kind codes for ``(d_r, d_s, d_t)``
* ``sig_params``: ``(3, 4)`` rows of ``[amplitude, freq, phase, dwell]``
* ``tab_r, tab_s, tab_t``: piecewise-constant noise levels (indexed by ``floor(t / dwell)``)
* ``x0``: packed initial state, then ``t0, dt, n_steps, stride``

Noise levels are held over each whole step (sampled at the step midpoint) so
that dwell boundaries aligned with the step grid never split a step.
"""

from math import exp, floor, isfinite, sin, sqrt

import numpy as np

NX = 7


def _field_fn(code, prm):
    prm = [float(v) for v in prm]
    if code == 0:
        c = prm[0]
        return lambda x, y: c
    if code == 1:
        a1, a2, b = prm
        return lambda x, y: a1 * x + a2 * y + b
    if code == 2:
        scale, c1, c2, off = prm

        def quad(x, y):
            dx = x - c1
            dy = y - c2
            return scale * (dx * dx + dy * dy) + off

        return quad
    if code == 3:
        depth, width, ring_depth, sharpness, radius = prm
        rr = radius * radius

        def ring(x, y):
            s = x * x + y * y
            u = s - rr
            return -depth * exp(-s / width) - ring_depth * exp(-sharpness * u * u)

        return ring
    comps = [tuple(prm[i : i + 4]) for i in range(0, len(prm), 4)]

    def mixture(x, y):
        out = 0.0
        for w, c1, c2, sig in comps:
            dx = x - c1
            dy = y - c2
            out = out + w * exp(-(dx * dx + dy * dy) / (2.0 * sig * sig))
        return out

    return mixture


def _signal_fn(code, sp, table):
    amp, freq, phase, dwell = (float(v) for v in sp)
    if code == 0:
        return lambda t, t_mid: 0.0
    if code == 1:
        return lambda t, t_mid: amp
    if code == 2:
        return lambda t, t_mid: amp * sin(freq * t + phase)
    table = [float(v) for v in table]
    last = len(table) - 1

    def noise(t, t_mid):
        idx = int(floor(t_mid / dwell))
        return table[min(max(idx, 0), last)]

    return noise


def run_closed_loop(
    field_code, field_params, vp_arr, sig_codes, sig_params, tab_r, tab_s, tab_t, x0, t0, dt, n_steps, stride
):
    psi = _field_fn(int(field_code), field_params)
    d_r = _signal_fn(int(sig_codes[0]), sig_params[0], tab_r)
    d_s = _signal_fn(int(sig_codes[1]), sig_params[1], tab_s)
    d_t = _signal_fn(int(sig_codes[2]), sig_params[2], tab_t)
    m, J, k, kappa, eps, lam, tau, h, r = (float(v) for v in vp_arr)
    k_eps = k / eps
    eps_h = eps * h

    def rhs(t, t_mid, x):
        p1, p2, o1, o2, v, w, eta = x
        y_hat = psi(p1 + r * o1, p2 + r * o2) + d_s(t, t_mid)
        u_t = -lam * (y_hat - eta)
        return (
            v * o1,
            v * o2,
            -w * o2,
            w * o1,
            (-k_eps * v + u_t + d_t(t, t_mid)) / m,
            (-kappa * w + tau + d_r(t, t_mid)) / J,
            eps_h * (y_hat - eta),
        )

    x = [float(v) for v in x0]
    t0 = float(t0)
    dt = float(dt)
    half = 0.5 * dt
    sixth = dt / 6.0
    out = [list(x)]
    status, fail_step, fail_stage = 0, -1, 0
    rng = range(NX)
    for step in range(int(n_steps)):
        t = t0 + step * dt
        t_mid = t + half
        k1 = rhs(t, t_mid, x)
        if not all(map(isfinite, k1)):
            status, fail_step, fail_stage = 1, step, 1
            break
        k2 = rhs(t_mid, t_mid, [x[i] + half * k1[i] for i in rng])
        if not all(map(isfinite, k2)):
            status, fail_step, fail_stage = 1, step, 2
            break
        k3 = rhs(t_mid, t_mid, [x[i] + half * k2[i] for i in rng])
        if not all(map(isfinite, k3)):
            status, fail_step, fail_stage = 1, step, 3
            break
        k4 = rhs(t + dt, t_mid, [x[i] + dt * k3[i] for i in rng])
        if not all(map(isfinite, k4)):
            status, fail_step, fail_stage = 1, step, 4
            break
        x = [x[i] + sixth * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]) for i in rng]
        nrm = sqrt(x[2] * x[2] + x[3] * x[3])
        x[2] = x[2] / nrm
        x[3] = x[3] / nrm
        if (step + 1) % stride == 0:
            out.append(list(x))
    return np.array(out, dtype=np.float64).reshape(-1, NX), status, fail_step, fail_stage, np.array(x)
