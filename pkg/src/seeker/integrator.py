"""Fixed-step RK4 integration and trajectory recording.

Closed-loop runs go through a dedicated kernel: the compiled ``_kernel``
extension when it is importable, otherwise the pure-Python ``_pykernel``.
Set ``SEEKER_PURE_PYTHON=1`` to force the fallback.
"""

from __future__ import annotations

import logging
import math
import os
import warnings
from dataclasses import dataclass, field as dc_field
from typing import Callable

import numpy as np

from . import _pykernel
from .averaging import DEFAULT_QUADRATURE, QuadratureSpec
from .dynamics import (
    NO_DISTURBANCE,
    STATE_COLUMNS,
    DisturbanceTriple,
    UnicycleState,
    VehicleParams,
    as_state_array,
    averaged_rhs,
)
from .field import ScalarField

log = logging.getLogger(__name__)

try:
    from . import _kernel
except ImportError:  # pragma: no cover - depends on the build
    _kernel = None

COMPILED_AVAILABLE = _kernel is not None
DEFAULT_BACKEND = "compiled" if COMPILED_AVAILABLE and not os.environ.get("SEEKER_PURE_PYTHON") else "python"

ORIENTATION = slice(2, 4)


class NumericalAbort(RuntimeError):
    """A Runge-Kutta stage produced a non-finite value."""

    def __init__(self, time: float, state, stage: int):
        self.time = time
        self.state = np.asarray(state)
        self.stage = stage
        super().__init__(f"non-finite RK4 stage {stage} at t={time:.17g}, state={self.state.tolist()}")


@dataclass(frozen=True)
class IntegrationSpec:
    dt: float = 1e-3
    t0: float = 0.0
    t1: float = 500.0
    sample_stride: int = 1

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if not self.t1 > self.t0:
            raise ValueError("t1 must exceed t0")
        if self.sample_stride < 1:
            raise ValueError("sample_stride must be a positive integer")
        n = (self.t1 - self.t0) / self.dt
        if abs(n - round(n)) > 1e-6 * max(1.0, n):
            raise ValueError(f"horizon {self.t1 - self.t0} is not a whole number of steps of {self.dt}")
        if round(n) % self.sample_stride:
            raise ValueError(f"{round(n)} steps is not a multiple of sample_stride={self.sample_stride}")

    @property
    def n_steps(self) -> int:
        return int(round((self.t1 - self.t0) / self.dt))

    @property
    def sample_times(self) -> np.ndarray:
        idx = np.arange(0, self.n_steps + 1, self.sample_stride)
        return self.t0 + idx * self.dt

    def check_step(self, vp: VehicleParams) -> bool:
        """Warn when ``dt`` under-resolves the fastest linear time constant."""
        limit = 0.01 * min(vp.eps * vp.m / vp.k, vp.J / vp.kappa)
        if self.dt > limit * (1 + 1e-12):
            warnings.warn(f"dt={self.dt} exceeds 1% of the fastest time constant ({limit:.3g})", stacklevel=2)
            return False
        return True


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    columns: tuple[str, ...] = STATE_COLUMNS
    params: VehicleParams | None = None
    disturbance_norms: tuple[float, float, float] = (0.0, 0.0, 0.0)
    dt: float = 0.0
    sample_stride: int = 1
    meta: dict = dc_field(default_factory=dict)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=np.float64)
        self.states = np.asarray(self.states, dtype=np.float64)
        if self.states.ndim != 2 or len(self.times) != len(self.states):
            raise ValueError("times and states must have matching length")

    def __len__(self):
        return len(self.times)

    def column(self, name: str) -> np.ndarray:
        return self.states[:, self.columns.index(name)]

    @property
    def p(self) -> np.ndarray:
        return self.states[:, 0:2]

    @property
    def o(self) -> np.ndarray:
        return self.states[:, 2:4]

    @property
    def v(self) -> np.ndarray:
        return self.column("v")

    @property
    def omega(self) -> np.ndarray:
        return self.column("omega")

    @property
    def eta(self) -> np.ndarray:
        return self.column("eta")

    def state(self, i: int) -> UnicycleState:
        return UnicycleState.from_array(self.states[i])

    def after(self, t: float) -> Trajectory:
        mask = self.times >= t
        return Trajectory(
            self.times[mask], self.states[mask], self.columns, self.params,
            self.disturbance_norms, self.dt, self.sample_stride, dict(self.meta),
        )

    def to_csv(self, path) -> None:
        """Write ``t`` plus state columns, 17 significant digits."""
        data = np.column_stack([self.times, self.states])
        header = ",".join(("t",) + tuple(self.columns))
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            np.savetxt(fh, data, fmt="%.17g", delimiter=",", header=header, comments="")

    @classmethod
    def from_csv(cls, path, **kwargs) -> Trajectory:
        with open(path, encoding="utf-8") as fh:
            header = fh.readline().strip().split(",")
            if header[0] != "t":
                raise ValueError(f"{path}: missing trajectory header")
            if not any(line.strip() for line in fh):
                raise ValueError(f"{path}: empty trajectory")
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        return cls(data[:, 0], data[:, 1:], tuple(header[1:]), **kwargs)


def rk4_step(rhs: Callable, t: float, x, dt: float, normalize: slice | None = None) -> np.ndarray:
    """One classical Runge-Kutta step of ``x' = rhs(t, x)``.

    ``normalize`` names a slice of ``x`` that is projected back onto the unit
    circle after the step. Raises :class:`NumericalAbort` on a non-finite stage.
    """
    x = np.asarray(x, dtype=np.float64)
    half = 0.5 * dt
    k1 = np.asarray(rhs(t, x), dtype=np.float64)
    if not np.all(np.isfinite(k1)):
        raise NumericalAbort(t, x, 1)
    k2 = np.asarray(rhs(t + half, x + half * k1), dtype=np.float64)
    if not np.all(np.isfinite(k2)):
        raise NumericalAbort(t, x, 2)
    k3 = np.asarray(rhs(t + half, x + half * k2), dtype=np.float64)
    if not np.all(np.isfinite(k3)):
        raise NumericalAbort(t, x, 3)
    k4 = np.asarray(rhs(t + dt, x + dt * k3), dtype=np.float64)
    if not np.all(np.isfinite(k4)):
        raise NumericalAbort(t, x, 4)
    x_next = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    if normalize is not None:
        o = x_next[normalize]
        x_next[normalize] = o / math.sqrt(o[0] * o[0] + o[1] * o[1])
    return x_next


def simulate(rhs: Callable, x0, spec: IntegrationSpec, normalize: slice | None = None, **meta) -> Trajectory:
    """Integrate ``x' = rhs(t, x)`` over ``[t0, t1]`` and record every ``sample_stride``-th state.

    A :class:`UnicycleState` initial value implies orientation renormalization.
    """
    if isinstance(x0, UnicycleState):
        normalize = ORIENTATION
    x = as_state_array(x0).copy()
    samples = [x.copy()]
    for step in range(spec.n_steps):
        t = spec.t0 + step * spec.dt
        x = rk4_step(rhs, t, x, spec.dt, normalize)
        if (step + 1) % spec.sample_stride == 0:
            samples.append(x.copy())
    columns = STATE_COLUMNS if len(x) == len(STATE_COLUMNS) else tuple(f"x{i + 1}" for i in range(len(x)))
    return Trajectory(spec.sample_times, np.array(samples), columns, dt=spec.dt, sample_stride=spec.sample_stride,
                      meta=meta)


def _signal_arrays(d: DisturbanceTriple, spec: IntegrationSpec):
    sigs = (d.d_r, d.d_s, d.d_t)
    codes = np.array([s.code for s in sigs], dtype=np.intc)
    params = np.array([[s.amplitude, s.freq, s.phase, s.dwell] for s in sigs], dtype=np.float64)
    tables = []
    for s in sigs:
        if s.kind == "noise":
            n = int(math.floor(max(spec.t1, 0.0) / s.dwell)) + 2
            tables.append(np.ascontiguousarray(s.noise_table(n), dtype=np.float64))
        else:
            tables.append(np.zeros(1))
    return codes, params, tables


def simulate_closed_loop(
    field: ScalarField,
    vp: VehicleParams,
    x0,
    spec: IntegrationSpec,
    d: DisturbanceTriple = NO_DISTURBANCE,
    backend: str | None = None,
) -> Trajectory:
    """Closed-loop source-seeking run through the selected kernel backend."""
    backend = backend or DEFAULT_BACKEND
    if backend == "compiled":
        if _kernel is None:
            raise RuntimeError("compiled kernel is not built; reinstall the package or use backend='python'")
        run = _kernel.run_closed_loop
    elif backend == "python":
        run = _pykernel.run_closed_loop
    else:
        raise ValueError(f"unknown backend {backend!r}")
    spec.check_step(vp)
    codes, sparams, (tab_r, tab_s, tab_t) = _signal_arrays(d, spec)
    vp_arr = np.array([vp.m, vp.J, vp.k, vp.kappa, vp.eps, vp.lam, vp.tau_star, vp.h, vp.r])
    x = np.ascontiguousarray(as_state_array(x0), dtype=np.float64)
    samples, status, fail_step, fail_stage, last = run(
        field.code, field.packed(), vp_arr, codes, sparams, tab_r, tab_s, tab_t,
        x, float(spec.t0), float(spec.dt), spec.n_steps, spec.sample_stride,
    )
    if status:
        raise NumericalAbort(spec.t0 + fail_step * spec.dt, last, fail_stage)
    log.debug("closed loop: %d steps via %s backend", spec.n_steps, backend)
    return Trajectory(
        spec.sample_times, samples, STATE_COLUMNS, vp, d.norms, spec.dt, spec.sample_stride,
        {"kind": "closed_loop", "backend": backend},
    )


def simulate_averaged(
    field: ScalarField,
    vp: VehicleParams,
    p0,
    spec: IntegrationSpec,
    d_bar: Callable | None = None,
    q: QuadratureSpec = DEFAULT_QUADRATURE,
) -> Trajectory:
    """Integrate the averaged gradient flow from ``p0``."""

    def rhs(t, p):
        return averaged_rhs(t, p, field, d_bar, vp, q)

    traj = simulate(rhs, np.asarray(p0, dtype=np.float64), spec)
    traj.columns = ("p1", "p2")
    traj.params = vp
    traj.meta["kind"] = "averaged"
    return traj
