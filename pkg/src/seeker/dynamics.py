"""Force/torque-actuated unicycle with a displaced sensor.

State vectors are packed as ``[p1, p2, o1, o2, v, omega, eta]`` everywhere
(RHS functions, kernels, CSV columns). ``o`` is the heading as a unit vector
in the plane; ``R`` below is the quarter turn ``(x, y) -> (-y, x)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field, fields, replace
from functools import cached_property
from typing import Any, Callable

import numpy as np

from .averaging import DEFAULT_QUADRATURE, QuadratureSpec, g_bar
from .field import ScalarField, evaluate

STATE_SIZE = 7
STATE_COLUMNS = ("p1", "p2", "o1", "o2", "v", "omega", "eta")


@dataclass(frozen=True)
class VehicleParams:
    """Physical and control constants; all must be strictly positive.

    ``lam`` is the thrust feedback gain (``lambda`` in scenario files).
    """

    m: float = 1.0
    J: float = 1.0
    k: float = 1.0
    kappa: float = 1.0
    eps: float = 0.1
    lam: float = 1.0
    tau_star: float = 1.0
    h: float = 1.0
    r: float = 0.2

    def __post_init__(self):
        for f in fields(self):
            val = float(getattr(self, f.name))
            if not (math.isfinite(val) and val > 0):
                raise ValueError(f"vehicle parameter {f.name} must be positive and finite, got {val!r}")
            object.__setattr__(self, f.name, val)

    @property
    def omega_star(self) -> float:
        """Steady spin rate under constant torque against rotational damping."""
        return self.tau_star / self.kappa

    @property
    def fast_time_constant(self) -> float:
        return max(self.eps * self.m / self.k, self.J / self.kappa)

    @property
    def drift_gain(self) -> float:
        """Coefficient ``eps lam r / (2 k)`` of the averaged gradient flow."""
        return self.eps * self.lam * self.r / (2.0 * self.k)

    def with_(self, **changes) -> VehicleParams:
        return replace(self, **changes)


@dataclass(frozen=True)
class UnicycleState:
    p: tuple[float, float]
    o: tuple[float, float] = (1.0, 0.0)
    v: float = 0.0
    omega: float = 0.0
    eta: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "p", (float(self.p[0]), float(self.p[1])))
        object.__setattr__(self, "o", (float(self.o[0]), float(self.o[1])))
        if abs(math.hypot(*self.o) - 1.0) > 1e-9:
            raise ValueError(f"orientation must be a unit vector, got {self.o!r}")

    def as_array(self) -> np.ndarray:
        return np.array([*self.p, *self.o, self.v, self.omega, self.eta], dtype=np.float64)

    @classmethod
    def from_array(cls, x) -> UnicycleState:
        x = np.asarray(x, dtype=np.float64)
        o = x[2:4] / np.hypot(x[2], x[3])
        return cls((x[0], x[1]), (o[0], o[1]), float(x[4]), float(x[5]), float(x[6]))


def as_state_array(state) -> np.ndarray:
    if isinstance(state, UnicycleState):
        return state.as_array()
    return np.asarray(state, dtype=np.float64)


# -- disturbances -----------------------------------------------------------

SIGNAL_CODES = {"zero": 0, "constant": 1, "sinusoid": 2, "noise": 3}


@dataclass(frozen=True)
class BoundedSignal:
    """Deterministic disturbance with a known sup norm.

    ``noise`` is piecewise constant on ``[n dwell, (n+1) dwell)`` with values
    drawn uniformly from ``[-amplitude, amplitude]`` by a seeded generator;
    for ``t < 0`` the first value is held.
    """

    kind: str = "zero"
    amplitude: float = 0.0
    freq: float = 1.0
    phase: float = 0.0
    dwell: float = 0.1
    seed: int = 0
    _table: list = dc_field(default_factory=list, init=False, repr=False, compare=False, hash=False)

    def __post_init__(self):
        if self.kind not in SIGNAL_CODES:
            raise ValueError(f"unknown signal kind {self.kind!r}")
        if self.kind in ("sinusoid", "noise") and self.amplitude < 0:
            raise ValueError("amplitude must be non-negative")
        if self.kind == "noise" and not self.dwell > 0:
            raise ValueError("noise dwell must be positive")

    @classmethod
    def zero(cls) -> BoundedSignal:
        return cls()

    @classmethod
    def constant(cls, c: float) -> BoundedSignal:
        return cls("constant", amplitude=c)

    @classmethod
    def sinusoid(cls, amplitude: float, freq: float = 1.0, phase: float = 0.0) -> BoundedSignal:
        return cls("sinusoid", amplitude=amplitude, freq=freq, phase=phase)

    @classmethod
    def noise(cls, amplitude: float, dwell: float = 0.1, seed: int = 0) -> BoundedSignal:
        return cls("noise", amplitude=amplitude, dwell=dwell, seed=seed)

    @property
    def norm(self) -> float:
        return 0.0 if self.kind == "zero" else abs(self.amplitude)

    @property
    def code(self) -> int:
        return SIGNAL_CODES[self.kind]

    def noise_table(self, n: int) -> np.ndarray:
        """First ``n`` piecewise-constant noise levels (prefix-stable in ``n``)."""
        if self.kind != "noise":
            return np.zeros(max(n, 1))
        if len(self._table) < n:
            size = max(n, 2 * len(self._table), 1024)
            rng = np.random.default_rng(self.seed)
            self._table[:] = rng.uniform(-self.amplitude, self.amplitude, size).tolist()
        return np.asarray(self._table[:n])

    def __call__(self, t: float) -> float:
        kind = self.kind
        if kind == "zero":
            return 0.0
        if kind == "constant":
            return self.amplitude
        if kind == "sinusoid":
            return self.amplitude * math.sin(self.freq * t + self.phase)
        idx = max(int(math.floor(t / self.dwell)), 0)
        return float(self.noise_table(idx + 1)[idx])

    def to_dict(self) -> dict[str, Any]:
        if self.kind == "zero":
            return {"kind": "zero"}
        if self.kind == "constant":
            return {"kind": "constant", "c": self.amplitude}
        if self.kind == "sinusoid":
            return {"kind": "sinusoid", "amplitude": self.amplitude, "freq": self.freq, "phase": self.phase}
        return {"kind": "noise", "amplitude": self.amplitude, "dwell": self.dwell, "seed": self.seed}

    @classmethod
    def from_dict(cls, d: dict[str, Any], default_seed: int = 0) -> BoundedSignal:
        d = dict(d)
        kind = d.pop("kind", "zero")
        allowed = {
            "zero": set(),
            "constant": {"c"},
            "sinusoid": {"amplitude", "freq", "phase"},
            "noise": {"amplitude", "dwell", "seed"},
        }
        if kind not in allowed:
            raise ValueError(f"unknown signal kind {kind!r}")
        extra = set(d) - allowed[kind]
        if extra:
            raise KeyError(sorted(extra)[0])
        if kind == "zero":
            return cls.zero()
        if kind == "constant":
            return cls.constant(d["c"])
        if kind == "sinusoid":
            return cls.sinusoid(d["amplitude"], d.get("freq", 1.0), d.get("phase", 0.0))
        return cls.noise(d["amplitude"], d.get("dwell", 0.1), int(d.get("seed", default_seed)))


@dataclass(frozen=True)
class DisturbanceTriple:
    d_r: BoundedSignal = BoundedSignal()
    d_s: BoundedSignal = BoundedSignal()
    d_t: BoundedSignal = BoundedSignal()

    @cached_property
    def norms(self) -> tuple[float, float, float]:
        return (self.d_r.norm, self.d_s.norm, self.d_t.norm)

    @property
    def is_zero(self) -> bool:
        return all(s.kind == "zero" or s.norm == 0.0 for s in (self.d_r, self.d_s, self.d_t))


NO_DISTURBANCE = DisturbanceTriple()


# -- right-hand sides -------------------------------------------------------


def open_loop_rhs(t: float, state, u_t: float, u_r: float, d: DisturbanceTriple, vp: VehicleParams) -> np.ndarray:
    """Unicycle dynamics with thrust ``u_t`` and torque ``u_r``; the filter is frozen."""
    x = as_state_array(state)
    o1, o2, v, omega = x[2], x[3], x[4], x[5]
    return np.array(
        [
            v * o1,
            v * o2,
            -omega * o2,
            omega * o1,
            (-(vp.k / vp.eps) * v + u_t + d.d_t(t)) / vp.m,
            (-vp.kappa * omega + u_r + d.d_r(t)) / vp.J,
            0.0,
        ]
    )


def measure(field: ScalarField, state, t: float, vp: VehicleParams, d_s: BoundedSignal = BoundedSignal()) -> float:
    """Sensor reading at ``p + r o`` plus measurement disturbance."""
    x = as_state_array(state)
    return evaluate(field, (x[0] + vp.r * x[2], x[1] + vp.r * x[3])) + d_s(t)


def control(y_hat: float, eta: float, vp: VehicleParams) -> tuple[float, float]:
    """Thrust proportional to the high-passed measurement, constant torque."""
    return -vp.lam * (y_hat - eta), vp.tau_star


def closed_loop_rhs(t: float, state, field: ScalarField, d: DisturbanceTriple, vp: VehicleParams) -> np.ndarray:
    x = as_state_array(state)
    y_hat = measure(field, x, t, vp, d.d_s)
    u_t, u_r = control(y_hat, x[6], vp)
    dx = open_loop_rhs(t, x, u_t, u_r, d, vp)
    dx[6] = vp.eps * vp.h * (y_hat - x[6])
    return dx


def averaged_rhs(
    t: float,
    p_bar,
    field: ScalarField,
    d_bar: Callable[[float], Any] | None,
    vp: VehicleParams,
    q: QuadratureSpec = DEFAULT_QUADRATURE,
) -> np.ndarray:
    """Disturbed gradient flow of the disk-averaged signal."""
    drift = -vp.drift_gain * g_bar(field, p_bar, vp.r, q)
    if d_bar is not None:
        drift = drift + vp.eps * np.asarray(d_bar(t), dtype=np.float64)
    return drift
