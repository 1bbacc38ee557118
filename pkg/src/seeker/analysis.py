"""Post-hoc checks on simulated trajectories.

The stability result behind the controller only asserts the existence of
comparison functions and constants. Of its inequalities, the rotational one
has explicit constants and is checked literally; the translational and
filter envelopes are checked with empirically fitted constants (the
``nu_*`` hats), and the position estimate is checked through its decrease
and scaling behaviour.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field as dc_field

import numpy as np

from .averaging import DEFAULT_QUADRATURE, QuadratureSpec, circle_nodes, g_bar, psi_avg, rotate
from .dynamics import VehicleParams, as_state_array
from .field import ScalarField, evaluate
from .integrator import Trajectory

INTEGRATOR_SLACK = 1e-6
TRANSIENT_FACTOR = 5.0


@dataclass
class BoundReport:
    bound_id: str
    max_violation: float
    times: np.ndarray = dc_field(repr=False)
    margin: np.ndarray = dc_field(repr=False)
    slack: float = INTEGRATOR_SLACK
    details: dict = dc_field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return bool(self.max_violation <= self.slack)

    def summary(self) -> dict:
        return {
            "bound_id": self.bound_id,
            "pass": self.passed,
            "max_violation": float(self.max_violation),
            "min_margin": float(np.min(self.margin)) if len(self.margin) else None,
            "slack": self.slack,
            **self.details,
        }


def _report(bound_id, times, bound, observed, slack, **details) -> BoundReport:
    margin = bound - observed
    violation = float(np.max(-margin)) if len(margin) else 0.0
    return BoundReport(bound_id, violation, np.asarray(times), margin, slack, details)


def _transient(vp: VehicleParams) -> float:
    return TRANSIENT_FACTOR * vp.fast_time_constant


# -- change of variables ----------------------------------------------------


def transform_state(t: float, state, field: ScalarField, vp: VehicleParams) -> np.ndarray:
    """Map a closed-loop state to the co-rotating frame.

    Returns ``[p, o~, v~, omega~, eta]`` with ``o~ = Rot(-omega* t) o``,
    ``v~ = v + eps (lam/k)(psi(p + r o) - eta)`` and ``omega~ = omega - omega*``.
    Works row-wise on ``(n, 7)`` arrays with matching ``t``.
    """
    x = as_state_array(state)
    t = np.asarray(t, dtype=np.float64)
    p, o = x[..., 0:2], x[..., 2:4]
    resid = np.asarray(evaluate(field, p + vp.r * o)) - x[..., 6]
    out = np.empty_like(x)
    out[..., 0:2] = p
    out[..., 2:4] = rotate(-vp.omega_star * t, o)
    out[..., 4] = x[..., 4] + vp.eps * (vp.lam / vp.k) * resid
    out[..., 5] = x[..., 5] - vp.omega_star
    out[..., 6] = x[..., 6]
    return out


def inverse_transform_state(t: float, tstate, field: ScalarField, vp: VehicleParams) -> np.ndarray:
    y = np.asarray(tstate, dtype=np.float64)
    t = np.asarray(t, dtype=np.float64)
    out = np.empty_like(y)
    out[..., 0:2] = y[..., 0:2]
    o = rotate(vp.omega_star * t, y[..., 2:4])
    out[..., 2:4] = o
    resid = np.asarray(evaluate(field, y[..., 0:2] + vp.r * o)) - y[..., 6]
    out[..., 4] = y[..., 4] - vp.eps * (vp.lam / vp.k) * resid
    out[..., 5] = y[..., 5] + vp.omega_star
    out[..., 6] = y[..., 6]
    return out


def transform_trajectory(traj: Trajectory, field: ScalarField, vp: VehicleParams | None = None) -> np.ndarray:
    vp = vp or traj.params
    return transform_state(traj.times, traj.states, field, vp)


# -- velocity envelopes -----------------------------------------------------


def check_rotational_bound(
    traj: Trajectory, vp: VehicleParams | None = None, d_norms=None, slack: float = INTEGRATOR_SLACK
) -> BoundReport:
    """``|omega - omega*| <= |omega0 - omega*| exp(-kappa (t - t0)/J) + |d_r|/kappa``."""
    vp = vp or traj.params
    d_r = (d_norms or traj.disturbance_norms)[0]
    t = traj.times - traj.times[0]
    dev = np.abs(traj.omega - vp.omega_star)
    bound = dev[0] * np.exp(-vp.kappa * t / vp.J) + d_r / vp.kappa
    return _report("21e", traj.times, bound, dev, slack, d_r_norm=d_r)


def check_translational_bound(
    traj: Trajectory, vp: VehicleParams | None = None, nu_v: float = 0.0, slack: float = INTEGRATOR_SLACK
) -> BoundReport:
    """``|v| <= |v0| exp(-k (t - t0)/(eps m)) + nu_v eps``."""
    vp = vp or traj.params
    t = traj.times - traj.times[0]
    v = np.abs(traj.v)
    bound = v[0] * np.exp(-vp.k * t / (vp.eps * vp.m)) + nu_v * vp.eps
    return _report("21d", traj.times, bound, v, slack, nu_v=nu_v)


def fit_nu_v(traj: Trajectory, vp: VehicleParams | None = None, transient: float | None = None) -> float:
    """Post-transient ``sup |v| / eps``."""
    vp = vp or traj.params
    transient = _transient(vp) if transient is None else transient
    mask = traj.times >= traj.times[0] + transient
    if not mask.any():
        raise ValueError(f"no samples after the transient of {transient:g} time units")
    return float(np.max(np.abs(traj.v[mask])) / vp.eps)


def fit_decay_rate(times, values) -> float:
    """Least-squares slope of ``-log|values|`` against time."""
    times = np.asarray(times, dtype=np.float64)
    logs = np.log(np.abs(np.asarray(values, dtype=np.float64)))
    slope, _ = np.polyfit(times, logs, 1)
    return float(-slope)


# -- filter envelope --------------------------------------------------------


@dataclass(frozen=True)
class LambdaGrid:
    """Square sampling grid for estimating the sensed value range."""

    lower: tuple[float, float] = (-5.0, -5.0)
    upper: tuple[float, float] = (5.0, 5.0)
    step: float = 0.05
    angular_nodes: int = 64

    def points(self) -> np.ndarray:
        xs = np.arange(self.lower[0], self.upper[0] + 0.5 * self.step, self.step)
        ys = np.arange(self.lower[1], self.upper[1] + 0.5 * self.step, self.step)
        gx, gy = np.meshgrid(xs, ys, indexing="ij")
        return np.column_stack([gx.ravel(), gy.ravel()])


@dataclass(frozen=True)
class LambdaEstimate:
    """Interval hull ``[lo, hi]`` of sensor readings over a sublevel set."""

    lo: float
    hi: float
    grid: LambdaGrid
    n_points: int

    def distance(self, eta):
        eta = np.asarray(eta, dtype=np.float64)
        out = np.maximum(self.lo - eta, 0.0) + np.maximum(eta - self.hi, 0.0)
        return float(out) if out.ndim == 0 else out

    def summary(self) -> dict:
        return {"lo": self.lo, "hi": self.hi, "n_points": self.n_points, "grid": asdict(self.grid)}


class EmptySublevelSet(ValueError):
    pass


def lambda_estimate(
    field: ScalarField,
    vp: VehicleParams,
    y0: float,
    grid: LambdaGrid = LambdaGrid(),
    q: QuadratureSpec = DEFAULT_QUADRATURE,
    chunk: int = 2048,
) -> LambdaEstimate:
    """Range of ``psi(p + r o)`` over grid points with ``Psi_r(p) <= y0``."""
    pts = grid.points()
    circ = circle_nodes(grid.angular_nodes)
    lo, hi, count = np.inf, -np.inf, 0
    for start in range(0, len(pts), chunk):
        block = pts[start : start + chunk]
        inside = block[psi_avg(field, block, vp.r, q) <= y0]
        if not len(inside):
            continue
        count += len(inside)
        vals = evaluate(field, inside[:, None, :] + vp.r * circ)
        lo = min(lo, float(np.min(vals)))
        hi = max(hi, float(np.max(vals)))
    if count == 0:
        raise EmptySublevelSet(f"no grid point has averaged value <= {y0}; y0 is below the sampled minimum")
    return LambdaEstimate(lo, hi, grid, count)


def _filter_terms(traj: Trajectory, vp: VehicleParams, lam: LambdaEstimate, d_norms):
    d_s = (d_norms or traj.disturbance_norms)[1]
    t = traj.times - traj.times[0]
    dist = lam.distance(traj.eta)
    envelope = dist[0] * np.exp(-vp.eps * vp.h * t) + d_s
    return dist, envelope, d_s


def fit_nu_eta(traj: Trajectory, lam: LambdaEstimate, vp: VehicleParams | None = None, d_norms=None) -> float:
    """Smallest constant that closes the filter envelope on ``traj``."""
    vp = vp or traj.params
    dist, envelope, _ = _filter_terms(traj, vp, lam, d_norms)
    return float(max(np.max(dist - envelope), 0.0))


def check_filter_bound(
    traj: Trajectory,
    field: ScalarField,
    vp: VehicleParams | None,
    lam: LambdaEstimate,
    d_norms=None,
    nu_eta: float = 0.0,
    slack: float = INTEGRATOR_SLACK,
) -> BoundReport:
    """Distance of ``eta`` to ``[lo, hi]`` against decayed initial distance plus ``|d_s| + nu_eta``."""
    vp = vp or traj.params
    dist, envelope, d_s = _filter_terms(traj, vp, lam, d_norms)
    return _report("21f", traj.times, envelope + nu_eta, dist, slack, nu_eta=nu_eta, d_s_norm=d_s,
                   lambda_lo=lam.lo, lambda_hi=lam.hi)


# -- averaging approximation ------------------------------------------------


def prop1_profile(
    traj: Trajectory,
    field: ScalarField,
    vp: VehicleParams | None = None,
    q: QuadratureSpec = DEFAULT_QUADRATURE,
    slow_horizon: float = 5.0,
    transient: float | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Deviation ``|p(t2) - p(t1) + int eps (lam r / 2k) G_r(p) dt|`` for ``t2`` in the window.

    ``t1`` sits ``transient`` after the start (default five fast time
    constants) and the window spans ``slow_horizon / eps`` time units.
    """
    vp = vp or traj.params
    if any(n != 0.0 for n in traj.disturbance_norms):
        raise ValueError("averaging error is only computable for undisturbed runs")
    transient = _transient(vp) if transient is None else transient
    t1 = traj.times[0] + transient
    t3 = t1 + slow_horizon / vp.eps
    if traj.times[-1] < t3 - 1e-9:
        raise ValueError(f"trajectory ends at {traj.times[-1]}, window needs up to {t3}")
    i1 = int(np.searchsorted(traj.times, t1 - 1e-9))
    i3 = int(np.searchsorted(traj.times, t3 + 1e-9))
    times = traj.times[i1:i3]
    p = traj.p[i1:i3]
    drift = -vp.drift_gain * g_bar(field, p, vp.r, q)
    dt = np.diff(times)[:, None]
    integral = np.vstack([np.zeros((1, 2)), np.cumsum(0.5 * dt * (drift[1:] + drift[:-1]), axis=0)])
    err = np.linalg.norm(p - p[0] - integral, axis=1)
    return times, err


def prop1_error(traj: Trajectory, field: ScalarField, vp: VehicleParams | None = None,
                q: QuadratureSpec = DEFAULT_QUADRATURE, slow_horizon: float = 5.0,
                transient: float | None = None) -> float:
    _, err = prop1_profile(traj, field, vp, q, slow_horizon, transient)
    return float(np.max(err))


def loglog_slope(eps_values, errors) -> float:
    slope, _ = np.polyfit(np.log(np.asarray(eps_values, float)), np.log(np.asarray(errors, float)), 1)
    return float(slope)


# -- decrease of the averaged objective -------------------------------------


@dataclass
class SublevelTrace:
    times: np.ndarray
    values: np.ndarray

    @property
    def max_uptick(self) -> float:
        if len(self.values) < 2:
            return 0.0
        return float(max(np.max(np.diff(self.values)), 0.0))

    @property
    def final(self) -> float:
        return float(self.values[-1])

    @property
    def max_excursion(self) -> float:
        """Largest rise above the running minimum (fitted ``nu_p``)."""
        return float(np.max(self.values - np.minimum.accumulate(self.values)))


def sublevel_trace(
    traj: Trajectory,
    field: ScalarField,
    vp: VehicleParams | None = None,
    q: QuadratureSpec = DEFAULT_QUADRATURE,
    y_star: float = 0.0,
) -> SublevelTrace:
    """``Psi_r(p(t)) - y_star`` along the recorded positions."""
    vp = vp or traj.params
    return SublevelTrace(traj.times.copy(), np.asarray(psi_avg(field, traj.p, vp.r, q)) - y_star)
