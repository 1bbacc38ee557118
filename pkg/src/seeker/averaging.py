"""Disk and circle averages of a signal field.

The disk average ``Psi_r(p) = (1/pi) int_D psi(p + r q) dq`` is computed in
polar coordinates: Gauss-Legendre in the radius (Jacobian ``rho``) times the
uniform trapezoid rule in the angle. The angular rule is spectrally accurate
for smooth periodic integrands, and the same circle nodes give the boundary
field ``G_r``, so ``G_r = grad Psi_r`` holds to quadrature accuracy.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .field import ScalarField, ScalarField1D, evaluate

UNIT_TOL = 1e-9


@dataclass(frozen=True)
class QuadratureSpec:
    angular_nodes: int = 128
    radial_nodes: int = 16

    def __post_init__(self):
        if self.angular_nodes < 8 or self.angular_nodes % 2:
            raise ValueError("angular_nodes must be an even integer >= 8")
        if self.radial_nodes < 4:
            raise ValueError("radial_nodes must be >= 4")


DEFAULT_QUADRATURE = QuadratureSpec()
VERIFY_QUADRATURE = QuadratureSpec(256, 32)


@lru_cache(maxsize=32)
def circle_nodes(n: int) -> np.ndarray:
    """Unit vectors at angles ``2 pi k / n``, shape ``(n, 2)``."""
    theta = 2.0 * np.pi * np.arange(n) / n
    nodes = np.column_stack([np.cos(theta), np.sin(theta)])
    nodes.flags.writeable = False
    return nodes


@lru_cache(maxsize=32)
def _disk_rule(angular: int, radial: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(radial)
    rho = 0.5 * (x + 1.0)
    w_rho = 0.5 * w
    circ = circle_nodes(angular)
    offsets = (rho[:, None, None] * circ[None, :, :]).reshape(-1, 2)
    # (1/pi) * w_rho * rho * (2 pi / N)
    weights = np.repeat(2.0 * w_rho * rho / angular, angular)
    offsets.flags.writeable = False
    weights.flags.writeable = False
    return offsets, weights


def _check_radius(r):
    if not r > 0:
        raise ValueError("radius r must be positive")


def psi_avg(field: ScalarField, p, r: float, q: QuadratureSpec = DEFAULT_QUADRATURE):
    """Average of ``field`` over the closed disk of radius ``r`` centred at ``p``.

    ``p`` may be a single point or a ``(..., 2)`` array of points.
    """
    _check_radius(r)
    offsets, weights = _disk_rule(q.angular_nodes, q.radial_nodes)
    p = np.asarray(p, dtype=np.float64)
    vals = evaluate(field, p[..., None, :] + r * offsets)
    out = vals @ weights
    return float(out) if np.ndim(out) == 0 else out


def g_bar(field: ScalarField, p, r: float, q: QuadratureSpec = DEFAULT_QUADRATURE) -> np.ndarray:
    """Boundary vector field ``(1/pi) int_S (1/r) psi(p + r o) o dlambda(o)``."""
    _check_radius(r)
    n = q.angular_nodes
    circ = circle_nodes(n)
    p = np.asarray(p, dtype=np.float64)
    vals = evaluate(field, p[..., None, :] + r * circ)
    return (vals @ circ) * (2.0 / (n * r))


def rotate(theta: float, o) -> np.ndarray:
    """Counter-clockwise rotation of ``o`` by ``theta`` (broadcast over leading axes)."""
    c, s = np.cos(theta), np.sin(theta)
    o = np.asarray(o, dtype=np.float64)
    return np.stack([c * o[..., 0] - s * o[..., 1], s * o[..., 0] + c * o[..., 1]], axis=-1)


def _check_unit(o):
    o = np.asarray(o, dtype=np.float64)
    if o.shape != (2,) or abs(np.hypot(o[0], o[1]) - 1.0) > UNIT_TOL:
        raise ValueError(f"orientation must be a unit vector, got {o!r}")
    return o


def g_tilde(field: ScalarField, t, p, o, eta: float, r: float, omega_star: float) -> np.ndarray:
    """Rotating-sensor gradient probe ``(2/r)(psi(p + r e) - eta) e`` with ``e = Rot(omega* t) o``.

    ``t`` may be an array, in which case the result has shape ``t.shape + (2,)``.
    """
    _check_radius(r)
    if not omega_star > 0:
        raise ValueError("omega_star must be positive")
    o = _check_unit(o)
    t = np.asarray(t, dtype=np.float64)
    e = rotate(omega_star * t, o)
    p = np.asarray(p, dtype=np.float64)
    resid = evaluate(field, p + r * e) - eta
    return (2.0 / r) * np.asarray(resid)[..., None] * e


def time_average_g_tilde(
    field: ScalarField, p, o, eta: float, r: float, omega_star: float, n_time_nodes: int = 256
) -> np.ndarray:
    """Mean of :func:`g_tilde` over one rotation period (periodic trapezoid rule)."""
    if n_time_nodes < 1:
        raise ValueError("n_time_nodes must be positive")
    period = 2.0 * np.pi / omega_star
    t = period * np.arange(n_time_nodes) / n_time_nodes
    return g_tilde(field, t, p, o, eta, r, omega_star).mean(axis=0)


def phi_avg_1d(phi: ScalarField1D, theta, a: float, n_nodes: int = 128):
    """Semicircle-weighted average ``(2/pi) int_{-1}^{1} sqrt(1 - s^2) phi(theta + a s) ds``.

    With ``s = cos u`` the integrand becomes ``sin(u)^2 phi(theta + a cos u)``,
    which is smooth and periodic on ``[0, 2 pi)``.
    """
    if not a > 0:
        raise ValueError("amplitude a must be positive")
    u = 2.0 * np.pi * np.arange(n_nodes) / n_nodes
    theta = np.asarray(theta, dtype=np.float64)
    vals = phi(theta[..., None] + a * np.cos(u))
    out = vals @ (np.sin(u) ** 2) * (2.0 / n_nodes)
    return float(out) if np.ndim(out) == 0 else out


def g_bar_1d(phi: ScalarField1D, theta, a: float, n_nodes: int = 128):
    """Dither-demodulated slope ``(1/pi) int_0^{2 pi} (1/a) phi(theta + a sin tau) sin tau dtau``."""
    if not a > 0:
        raise ValueError("amplitude a must be positive")
    tau = 2.0 * np.pi * np.arange(n_nodes) / n_nodes
    theta = np.asarray(theta, dtype=np.float64)
    vals = phi(theta[..., None] + a * np.sin(tau))
    out = vals @ np.sin(tau) * (2.0 / (n_nodes * a))
    return float(out) if np.ndim(out) == 0 else out
