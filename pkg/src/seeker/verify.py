"""Verification suites behind ``seeker verify``.

Each suite returns a :class:`SuiteResult` made of named checks with the
observed value and the threshold it was held to. Bound reports produced on
the way are kept verbatim for the machine-readable summary.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field as dc_field, replace
from typing import Callable

import numpy as np

from . import analysis
from .averaging import (
    VERIFY_QUADRATURE,
    g_bar,
    g_bar_1d,
    phi_avg_1d,
    psi_avg,
    time_average_g_tilde,
)
from .config import Scenario, load_bundled, sweep_scenario
from .dynamics import BoundedSignal, DisturbanceTriple, UnicycleState
from .field import ScalarField, ScalarField1D, evaluate, grad_fd
from .integrator import IntegrationSpec, simulate_averaged, simulate_closed_loop

log = logging.getLogger(__name__)

SUITES = ("quadrature", "identities", "bounds", "averaging-scaling", "endtoend")


@dataclass
class Check:
    name: str
    passed: bool
    value: float
    threshold: float
    details: dict = dc_field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"name": self.name, "passed": bool(self.passed), "value": float(self.value),
                "threshold": float(self.threshold), "details": self.details}


@dataclass
class SuiteResult:
    suite: str
    checks: list[Check] = dc_field(default_factory=list)
    reports: list[dict] = dc_field(default_factory=list)
    elapsed: float = 0.0

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks) and all(r["pass"] for r in self.reports)

    def below(self, name: str, value: float, threshold: float, **details) -> Check:
        c = Check(name, bool(value < threshold), value, threshold, details)
        self.checks.append(c)
        return c

    def above(self, name: str, value: float, threshold: float, **details) -> Check:
        c = Check(name, bool(value >= threshold), value, threshold, details)
        self.checks.append(c)
        return c

    def to_dict(self) -> dict:
        return {
            "suite": self.suite,
            "passed": self.passed,
            "elapsed_s": round(self.elapsed, 3),
            "checks": [c.to_dict() for c in self.checks],
            "reports": self.reports,
        }


# -- shared fixtures ---------------------------------------------------------

def identity_fields() -> dict[str, ScalarField]:
    return {
        "ring_gaussian": ScalarField.ring_gaussian(),
        "quadratic": ScalarField.quadratic(0.7, (0.5, -1.0), 0.3),
        "linear": ScalarField.linear((0.8, -1.3), 0.4),
        "gaussian_mixture": ScalarField.gaussian_mixture(
            [-2.0, 1.0, -0.5], [(0.0, 0.0), (1.5, -1.0), (-2.0, 2.0)], [1.2, 0.6, 0.8]
        ),
    }


def noisy_disturbance(amplitude: float = 0.02, seeds=(1, 2, 3), dwell: float = 0.1) -> DisturbanceTriple:
    return DisturbanceTriple(*(BoundedSignal.noise(amplitude, dwell, s) for s in seeds))


def _run(sc: Scenario, backend=None):
    return simulate_closed_loop(sc.field, sc.vehicle, sc.initial, sc.integration, sc.disturbance, backend)


# -- suites ------------------------------------------------------------------

def suite_quadrature(base: Scenario | None = None) -> SuiteResult:
    res = SuiteResult("quadrature")
    quad = ScalarField.quadratic()
    rng = np.random.default_rng(0)
    pts = rng.uniform(-4, 4, size=(50, 2))
    e_psi = e_g = 0.0
    for r in (0.1, 0.2, 1.0, 2.5):
        exact = np.sum(pts**2, axis=1) + r * r / 2
        e_psi = max(e_psi, float(np.max(np.abs(psi_avg(quad, pts, r) - exact))))
        e_g = max(e_g, float(np.max(np.abs(g_bar(quad, pts, r) - 2 * pts))))
    res.below("psi_avg_quadratic", e_psi, 1e-10)
    res.below("g_bar_quadratic", e_g, 1e-10)

    phi = ScalarField1D.polynomial([0.0, 0.0, 1.0])
    theta = np.linspace(-3, 3, 41)
    e_avg = e_slope = 0.0
    for a in (0.05, 0.5, 2.0):
        e_avg = max(e_avg, float(np.max(np.abs(phi_avg_1d(phi, theta, a) - (theta**2 + a * a / 4)))))
        e_slope = max(e_slope, float(np.max(np.abs(g_bar_1d(phi, theta, a) - 2 * theta))))
    res.below("phi_avg_1d_quadratic", e_avg, 1e-10)
    res.below("g_bar_1d_quadratic", e_slope, 1e-10)

    ring = ScalarField.ring_gaussian()
    val = evaluate(ring, (-2.0, 0.0))
    res.below("ring_value_at_radius_2", abs(val - (-5 * np.exp(-4 / 6) - 0.5)), 1e-14)
    return res


def gradient_identity_max_error(fields: dict[str, ScalarField] | None = None, radii=(0.1, 0.2, 1.0), n_grid: int = 21,
                   step: float = 1e-5) -> dict[str, float]:
    """Largest ``|G_r - FD grad Psi_r|`` over a square grid on ``[-4, 4]^2`` per field."""
    fields = fields or identity_fields()
    g = np.linspace(-4, 4, n_grid)
    gx, gy = np.meshgrid(g, g, indexing="ij")
    pts = np.column_stack([gx.ravel(), gy.ravel()])
    out = {}
    for name, f in fields.items():
        worst = 0.0
        for r in radii:
            def psi(p, f=f, r=r):
                return psi_avg(f, p, r, VERIFY_QUADRATURE)
            fd = grad_fd(psi, pts, step)
            worst = max(worst, float(np.max(np.abs(g_bar(f, pts, r, VERIFY_QUADRATURE) - fd))))
        out[name] = worst
    return out


def dither_identity_1d_max_error(step: float = 1e-5) -> float:
    phi = ScalarField1D.gaussian_mixture([-1.0, 0.4], [0.0, 1.5], [0.7, 0.3])
    theta = np.linspace(-3, 3, 61)
    worst = 0.0
    for a in (0.1, 0.5, 1.0):
        fd = (phi_avg_1d(phi, theta + step, a) - phi_avg_1d(phi, theta - step, a)) / (2 * step)
        worst = max(worst, float(np.max(np.abs(g_bar_1d(phi, theta, a) - fd))))
    return worst


def time_average_errors(n_cases: int = 50, seed: int = 0) -> tuple[float, float]:
    """(max |mean G~ - G_r|, max change of mean G~ under new (o, eta)) over random cases."""
    rng = np.random.default_rng(seed)
    fields = list(identity_fields().values())
    err = inv = 0.0
    for _ in range(n_cases):
        f = fields[rng.integers(len(fields))]
        p = rng.uniform(-3, 3, 2)
        r = rng.uniform(0.05, 1.0)
        w = rng.uniform(0.2, 3.0)
        a1, a2 = rng.uniform(0, 2 * np.pi, 2)
        e1, e2 = rng.uniform(-3, 3, 2)
        m1 = time_average_g_tilde(f, p, (np.cos(a1), np.sin(a1)), e1, r, w)
        m2 = time_average_g_tilde(f, p, (np.cos(a2), np.sin(a2)), e2, r, w)
        err = max(err, float(np.max(np.abs(m1 - g_bar(f, p, r, VERIFY_QUADRATURE)))))
        inv = max(inv, float(np.max(np.abs(m1 - m2))))
    return err, inv


def suite_identities(base: Scenario | None = None) -> SuiteResult:
    res = SuiteResult("identities")
    for name, err in gradient_identity_max_error().items():
        res.below(f"divergence_identity_{name}", err, 1e-6)
    res.below("dither_identity_1d", dither_identity_1d_max_error(), 1e-6)
    err, inv = time_average_errors()
    res.below("time_average_matches_g_bar", err, 1e-8)
    res.below("time_average_invariant_in_o_eta", inv, 1e-10)
    return res


def omega_closed_form_error(traj, vp) -> float:
    t = traj.times - traj.times[0]
    w0 = traj.omega[0]
    exact = vp.omega_star + (w0 - vp.omega_star) * np.exp(-vp.kappa * t / vp.J)
    return float(np.max(np.abs(traj.omega - exact)))


def velocity_envelope_ratios(base: Scenario, eps_values=(0.1, 0.05, 0.025), backend=None) -> list[float]:
    """Post-transient ``sup |v|`` for each ``eps`` at matched slow time."""
    sups = []
    for eps in eps_values:
        traj = _run(sweep_scenario(base, eps, base.vehicle.r), backend)
        sups.append(analysis.fit_nu_v(traj) * eps)
    return sups


def filter_bound_reports(base: Scenario, amplitude: float = 0.02, backend=None):
    """Noisy run, its noiseless companion, the Lambda hull and the 21f report."""
    clean = _run(replace(base, disturbance=DisturbanceTriple()), backend)
    noisy_sc = replace(base, disturbance=noisy_disturbance(amplitude))
    noisy = _run(noisy_sc, backend)
    lam = analysis.lambda_estimate(base.field, base.vehicle, base.y0(), base.analysis.lambda_grid,
                                   base.analysis.quadrature)
    nu_eta = analysis.fit_nu_eta(clean, lam)
    report = analysis.check_filter_bound(noisy, base.field, base.vehicle, lam, nu_eta=nu_eta)
    return clean, noisy, lam, nu_eta, report


def suite_bounds(base: Scenario | None = None, backend=None) -> SuiteResult:
    base = base or load_bundled("ring_r02")
    res = SuiteResult("bounds")

    sin_sc = replace(base, disturbance=DisturbanceTriple(d_r=BoundedSignal.sinusoid(0.05, 1.3)))
    rep = analysis.check_rotational_bound(_run(sin_sc, backend))
    res.reports.append({**rep.summary(), "run": "sinusoidal d_r 0.05"})

    clean = _run(replace(base, disturbance=DisturbanceTriple()), backend)
    res.below("omega_closed_form", omega_closed_form_error(clean, base.vehicle), 1e-8)
    res.reports.append({**analysis.check_rotational_bound(clean).summary(), "run": "undisturbed"})

    sups = velocity_envelope_ratios(base, backend=backend)
    for i in range(1, len(sups)):
        res.below(f"sup_v_ratio_{i}", sups[i] / sups[i - 1], 0.6, sup_v=sups)

    _, noisy, lam, nu_eta, rep_f = filter_bound_reports(base, backend=backend)
    res.reports.append({**rep_f.summary(), "run": "noise 0.02", "lambda": lam.summary()})
    res.reports.append({**analysis.check_rotational_bound(noisy).summary(), "run": "noise 0.02"})
    return res


def scaling_scenario(base: Scenario, eps: float, r: float, slow_horizon: float = 5.0,
                     spacing: float = 0.01) -> Scenario:
    """Undisturbed run long enough for a ``slow_horizon`` averaging window after the transient."""
    vp = base.vehicle.with_(eps=eps, r=r)
    dt = min(base.integration.dt, eps / 100.0)
    stride = max(1, int(round(spacing / dt)))
    chunk = dt * stride
    span = 5.0 * vp.fast_time_constant + slow_horizon / eps
    t1 = np.ceil(span / chunk - 1e-9) * chunk
    return replace(base, vehicle=vp, disturbance=DisturbanceTriple(),
                   integration=IntegrationSpec(dt, 0.0, float(t1), stride),
                   name=f"{base.name}-scaling-eps{eps:g}-r{r:g}")


def averaging_errors(base: Scenario, r: float, eps_values=(0.1, 0.05, 0.025), backend=None) -> list[float]:
    errs = []
    for eps in eps_values:
        sc = scaling_scenario(base, eps, r)
        errs.append(analysis.prop1_error(_run(sc, backend), sc.field, sc.vehicle, sc.analysis.quadrature))
    return errs


def suite_averaging_scaling(base: Scenario | None = None, backend=None) -> SuiteResult:
    base = base or load_bundled("ring_r02")
    res = SuiteResult("averaging-scaling")
    eps_values = base.analysis.eps_sweep
    for r in base.analysis.r_sweep:
        errs = averaging_errors(base, r, eps_values, backend)
        drops = max(b - a for a, b in zip(errs, errs[1:]))
        res.below(f"prop1_monotone_r{r:g}", drops, 0.0, errors=errs, eps=list(eps_values))
        res.above(f"prop1_loglog_slope_r{r:g}", analysis.loglog_slope(eps_values, errs), 0.8, errors=errs)
    return res


def averaged_vs_closed_loop(base: Scenario, backend=None):
    """Averaged flow from the start point and the closed-loop sublevel trace it should track."""
    vp = base.vehicle
    q = base.analysis.quadrature
    spec = base.integration
    avg = simulate_averaged(base.field, vp, base.initial.p, IntegrationSpec(0.1, spec.t0, spec.t1, 10), q=q)
    y_star = base.y_star()
    avg_trace = analysis.sublevel_trace(avg, base.field, vp, q, y_star)
    cl = _run(replace(base, disturbance=DisturbanceTriple()), backend)
    cl_trace = analysis.sublevel_trace(cl, base.field, vp, q, y_star)
    return avg, avg_trace, cl, cl_trace


def suite_endtoend(base: Scenario | None = None, backend=None) -> SuiteResult:
    res = SuiteResult("endtoend")
    r02 = load_bundled("ring_r02")
    r01 = load_bundled("ring_r01")
    p02 = float(np.linalg.norm(_run(r02, backend).p[-1]))
    res.below("ring_r02_reaches_source", p02, 0.3)
    p01 = float(np.linalg.norm(_run(r01, backend).p[-1]))
    res.checks.append(Check("ring_r01_trapped_near_ring", bool(1.5 <= p01 <= 2.5), p01, 2.0, {"band": [1.5, 2.5]}))

    avg, avg_trace, _, cl_trace = averaged_vs_closed_loop(base or r02, backend)
    res.below("averaged_trace_uptick", avg_trace.max_uptick, 1e-8)
    res.below("averaged_endpoint_norm", float(np.linalg.norm(avg.p[-1])), 0.05)
    res.below("closed_loop_tracks_averaged_endpoint", abs(cl_trace.final - avg_trace.final), 0.05)

    noisy = _run(replace(base or r02, disturbance=noisy_disturbance()), backend)
    res.below("noisy_run_reaches_source", float(np.linalg.norm(noisy.p[-1])), 0.5)
    res.reports.append({**analysis.check_rotational_bound(noisy).summary(), "run": "noise 0.02"})
    return res


RUNNERS: dict[str, Callable[..., SuiteResult]] = {
    "quadrature": suite_quadrature,
    "identities": suite_identities,
    "bounds": suite_bounds,
    "averaging-scaling": suite_averaging_scaling,
    "endtoend": suite_endtoend,
}


def run_suite(name: str, base: Scenario | None = None) -> SuiteResult:
    if name not in RUNNERS:
        raise KeyError(name)
    t0 = time.perf_counter()
    res = RUNNERS[name](base)
    res.elapsed = time.perf_counter() - t0
    log.info("suite %s: %s in %.1fs", name, "pass" if res.passed else "FAIL", res.elapsed)
    return res
