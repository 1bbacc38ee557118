"""Scenario files.

A scenario is a YAML mapping with a fixed set of sections::

    name: ring_r02
    seed: 0
    field:        {kind: ring_gaussian, ...}
    vehicle:      {m, J, k, kappa, eps, lambda, tau_star, h, r}   # all required
    initial:      {p: [x, y], o: [1, 0], v: 0, omega: 0, eta: 0}
    disturbance:  {d_r: {kind: ...}, d_s: {...}, d_t: {...}}
    integration:  {dt, t0, t1, sample_stride}
    analysis:     {y0, y_star, angular_nodes, radial_nodes, eps_sweep, r_sweep, lambda_grid}
    output_dir:   null

Unknown keys anywhere are rejected.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, dataclass, field as dc_field, replace
from importlib import resources
from pathlib import Path
from typing import Any

import yaml

from .analysis import LambdaGrid
from .averaging import QuadratureSpec, psi_avg
from .dynamics import BoundedSignal, DisturbanceTriple, UnicycleState, VehicleParams
from .field import FieldError, ScalarField, source_location
from .integrator import IntegrationSpec

BUNDLED = ("ring_r02", "ring_r01")

VEHICLE_KEYS = ("m", "J", "k", "kappa", "eps", "lambda", "tau_star", "h", "r")
TOP_KEYS = {"name", "seed", "field", "vehicle", "initial", "disturbance", "integration", "analysis", "output_dir"}
INITIAL_KEYS = {"p", "o", "v", "omega", "eta"}
INTEGRATION_KEYS = {"dt", "t0", "t1", "sample_stride"}
ANALYSIS_KEYS = {"y0", "y_star", "angular_nodes", "radial_nodes", "eps_sweep", "r_sweep", "lambda_grid"}
GRID_KEYS = {"lower", "upper", "step", "angular_nodes"}


class ConfigError(ValueError):
    """Malformed or inconsistent scenario description."""


@dataclass(frozen=True)
class AnalysisOptions:
    y0: float | None = None
    y_star: float | None = None
    quadrature: QuadratureSpec = QuadratureSpec()
    eps_sweep: tuple[float, ...] = (0.1, 0.05, 0.025)
    r_sweep: tuple[float, ...] = (0.1, 0.2)
    lambda_grid: LambdaGrid = LambdaGrid()


@dataclass(frozen=True)
class Scenario:
    field: ScalarField
    vehicle: VehicleParams
    initial: UnicycleState
    integration: IntegrationSpec
    disturbance: DisturbanceTriple = DisturbanceTriple()
    analysis: AnalysisOptions = AnalysisOptions()
    name: str = "scenario"
    seed: int = 0
    output_dir: str | None = dc_field(default=None, compare=False)

    # -- derived quantities -------------------------------------------------

    def y0(self) -> float:
        """Admissible level; defaults to the averaged signal at the start point."""
        if self.analysis.y0 is not None:
            return self.analysis.y0
        return psi_avg(self.field, self.initial.p, self.vehicle.r, self.analysis.quadrature)

    def y_star(self) -> float:
        """Target level; defaults to the averaged signal at the source."""
        if self.analysis.y_star is not None:
            return self.analysis.y_star
        return psi_avg(self.field, source_location(self.field), self.vehicle.r, self.analysis.quadrature)

    # -- (de)serialization --------------------------------------------------

    def to_dict(self) -> dict[str, Any]:
        vp = asdict(self.vehicle)
        vp["lambda"] = vp.pop("lam")
        a = self.analysis
        return {
            "name": self.name,
            "seed": self.seed,
            "field": self.field.to_dict(),
            "vehicle": {k: vp[k] for k in VEHICLE_KEYS},
            "initial": {
                "p": list(self.initial.p),
                "o": list(self.initial.o),
                "v": self.initial.v,
                "omega": self.initial.omega,
                "eta": self.initial.eta,
            },
            "disturbance": {
                "d_r": self.disturbance.d_r.to_dict(),
                "d_s": self.disturbance.d_s.to_dict(),
                "d_t": self.disturbance.d_t.to_dict(),
            },
            "integration": asdict(self.integration),
            "analysis": {
                "y0": a.y0,
                "y_star": a.y_star,
                "angular_nodes": a.quadrature.angular_nodes,
                "radial_nodes": a.quadrature.radial_nodes,
                "eps_sweep": list(a.eps_sweep),
                "r_sweep": list(a.r_sweep),
                "lambda_grid": {
                    "lower": list(a.lambda_grid.lower),
                    "upper": list(a.lambda_grid.upper),
                    "step": a.lambda_grid.step,
                    "angular_nodes": a.lambda_grid.angular_nodes,
                },
            },
            "output_dir": self.output_dir,
        }

    def dumps(self) -> str:
        return yaml.safe_dump(self.to_dict(), sort_keys=False, default_flow_style=None)

    def digest(self) -> str:
        """Stable hash of the canonical scenario (output location excluded)."""
        d = self.to_dict()
        d.pop("output_dir")
        blob = json.dumps(d, sort_keys=True, separators=(",", ":"), allow_nan=False)
        return hashlib.sha256(blob.encode()).hexdigest()

    @classmethod
    def from_dict(cls, raw: dict[str, Any]) -> Scenario:
        return _build(raw)

    def with_overrides(self, **kw) -> Scenario:
        return _build(apply_overrides(self.to_dict(), **kw))


# -- parsing --------------------------------------------------------------


def _section(raw: dict, name: str, allowed: set[str], required: tuple[str, ...] = ()) -> dict:
    sec = raw.get(name) or {}
    if not isinstance(sec, dict):
        raise ConfigError(f"section '{name}' must be a mapping")
    extra = set(sec) - allowed
    if extra:
        raise ConfigError(f"unknown key '{name}.{sorted(extra)[0]}'")
    for key in required:
        if key not in sec:
            raise ConfigError(f"missing required key '{name}.{key}'")
    return sec


def _pair(value, key) -> tuple[float, float]:
    if not isinstance(value, (list, tuple)) or len(value) != 2:
        raise ConfigError(f"'{key}' must be a list of two numbers")
    return (_num(value[0], key), _num(value[1], key))


def _num(value, key) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"'{key}' must be a number, got {value!r}")
    return float(value)


def _build(raw: dict[str, Any]) -> Scenario:
    if not isinstance(raw, dict):
        raise ConfigError("scenario must be a mapping at top level")
    extra = set(raw) - TOP_KEYS
    if extra:
        raise ConfigError(f"unknown key '{sorted(extra)[0]}'")
    for sec in ("field", "vehicle", "initial", "integration"):
        if sec not in raw:
            raise ConfigError(f"missing required section '{sec}'")
    seed = raw.get("seed", 0)
    if isinstance(seed, bool) or not isinstance(seed, int):
        raise ConfigError("'seed' must be an integer")
    try:
        fdesc = dict(raw["field"])
        if "kind" not in fdesc:
            raise ConfigError("missing required key 'field.kind'")
        field = ScalarField.from_dict(fdesc)
    except KeyError as exc:
        key = str(exc.args[0])
        raise ConfigError(f"unknown or missing key '{key if key.startswith('field.') else 'field.' + key}'") from None
    except (FieldError, TypeError) as exc:
        raise ConfigError(f"field: {exc}") from None

    veh = _section(raw, "vehicle", set(VEHICLE_KEYS), VEHICLE_KEYS)
    try:
        vehicle = VehicleParams(**{("lam" if k == "lambda" else k): _num(veh[k], f"vehicle.{k}") for k in VEHICLE_KEYS})
    except ValueError as exc:
        raise ConfigError(str(exc)) from None

    ini = _section(raw, "initial", INITIAL_KEYS, ("p",))
    try:
        initial = UnicycleState(
            _pair(ini["p"], "initial.p"),
            _pair(ini.get("o", [1.0, 0.0]), "initial.o"),
            _num(ini.get("v", 0.0), "initial.v"),
            _num(ini.get("omega", 0.0), "initial.omega"),
            _num(ini.get("eta", 0.0), "initial.eta"),
        )
    except ValueError as exc:
        raise ConfigError(f"initial: {exc}") from None

    dist = _section(raw, "disturbance", {"d_r", "d_s", "d_t"})
    signals = []
    for idx, key in enumerate(("d_r", "d_s", "d_t")):
        desc = dist.get(key) or {"kind": "zero"}
        try:
            signals.append(BoundedSignal.from_dict(desc, default_seed=3 * seed + idx))
        except KeyError as exc:
            raise ConfigError(f"unknown or missing key 'disturbance.{key}.{exc.args[0]}'") from None
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"disturbance.{key}: {exc}") from None

    integ = _section(raw, "integration", INTEGRATION_KEYS, ("dt", "t1"))
    try:
        stride = integ.get("sample_stride", 1)
        if isinstance(stride, bool) or not isinstance(stride, int):
            raise ConfigError("'integration.sample_stride' must be an integer")
        integration = IntegrationSpec(
            _num(integ["dt"], "integration.dt"),
            _num(integ.get("t0", 0.0), "integration.t0"),
            _num(integ["t1"], "integration.t1"),
            stride,
        )
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(f"integration: {exc}") from None

    ana = _section(raw, "analysis", ANALYSIS_KEYS)
    grid_raw = ana.get("lambda_grid") or {}
    if not isinstance(grid_raw, dict) or set(grid_raw) - GRID_KEYS:
        raise ConfigError("unknown key in 'analysis.lambda_grid'")
    try:
        grid = LambdaGrid(
            _pair(grid_raw.get("lower", [-5.0, -5.0]), "analysis.lambda_grid.lower"),
            _pair(grid_raw.get("upper", [5.0, 5.0]), "analysis.lambda_grid.upper"),
            _num(grid_raw.get("step", 0.05), "analysis.lambda_grid.step"),
            int(grid_raw.get("angular_nodes", 64)),
        )
        analysis = AnalysisOptions(
            None if ana.get("y0") is None else _num(ana["y0"], "analysis.y0"),
            None if ana.get("y_star") is None else _num(ana["y_star"], "analysis.y_star"),
            QuadratureSpec(int(ana.get("angular_nodes", 128)), int(ana.get("radial_nodes", 16))),
            tuple(_num(e, "analysis.eps_sweep") for e in ana.get("eps_sweep", (0.1, 0.05, 0.025))),
            tuple(_num(r, "analysis.r_sweep") for r in ana.get("r_sweep", (0.1, 0.2))),
            grid,
        )
    except ConfigError:
        raise
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"analysis: {exc}") from None

    name = raw.get("name", "scenario")
    if not isinstance(name, str) or not name:
        raise ConfigError("'name' must be a non-empty string")
    out = raw.get("output_dir")
    return Scenario(field, vehicle, initial, integration, DisturbanceTriple(*signals), analysis, name, seed,
                    None if out is None else str(out))


def apply_overrides(raw: dict[str, Any], seed=None, dt=None, eps=None, r=None) -> dict[str, Any]:
    """Return a copy of ``raw`` with command-line overrides applied.

    A new ``dt`` keeps the sample spacing ``dt * sample_stride`` when that is
    a whole number of new steps.
    """
    raw = json.loads(json.dumps(raw))
    if seed is not None:
        raw["seed"] = int(seed)
    if eps is not None:
        raw.setdefault("vehicle", {})["eps"] = float(eps)
    if r is not None:
        raw.setdefault("vehicle", {})["r"] = float(r)
    if dt is not None:
        integ = raw.setdefault("integration", {})
        spacing = float(integ.get("dt", dt)) * int(integ.get("sample_stride", 1))
        stride = spacing / dt
        integ["sample_stride"] = int(round(stride)) if abs(stride - round(stride)) < 1e-9 and stride >= 1 else 1
        integ["dt"] = float(dt)
    return raw


def parse_text(text: str, source: str = "<string>") -> dict[str, Any]:
    try:
        raw = yaml.safe_load(text)
    except yaml.MarkedYAMLError as exc:
        mark = exc.problem_mark or exc.context_mark
        where = f"line {mark.line + 1}, column {mark.column + 1}" if mark else "unknown position"
        raise ConfigError(f"{source}: parse error at {where}: {exc.problem}") from None
    except yaml.YAMLError as exc:
        raise ConfigError(f"{source}: parse error: {exc}") from None
    if raw is None:
        raise ConfigError(f"{source}: empty scenario file")
    return raw


def load_raw(path) -> dict[str, Any]:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from None
    return parse_text(text, str(path))


def load(path, **overrides) -> Scenario:
    raw = load_raw(path)
    if any(v is not None for v in overrides.values()):
        raw = apply_overrides(raw, **overrides)
    return _build(raw)


def bundled_path(name: str) -> Path:
    if name not in BUNDLED:
        raise ConfigError(f"no bundled scenario named {name!r}; choose from {', '.join(BUNDLED)}")
    return Path(str(resources.files("seeker") / "scenarios" / f"{name}.yaml"))


def load_bundled(name: str, **overrides) -> Scenario:
    return load(bundled_path(name), **overrides)


def resolve(path_or_name: str) -> Path:
    """Accept either a file path or the name of a bundled scenario."""
    if path_or_name in BUNDLED and not Path(path_or_name).exists():
        return bundled_path(path_or_name)
    return Path(path_or_name)


def sweep_scenario(base: Scenario, eps: float, r: float) -> Scenario:
    """Variant of ``base`` for one sweep point.

    The step is capped at ``eps / 100`` and the horizon is stretched so the
    slow time ``eps * (t1 - t0)`` matches the base scenario.
    """
    base_eps = base.vehicle.eps
    spec = base.integration
    dt = min(spec.dt, eps / 100.0)
    spacing = spec.dt * spec.sample_stride
    stride = max(1, int(round(spacing / dt)))
    span = (spec.t1 - spec.t0) * base_eps / eps
    chunk = dt * stride
    t1 = spec.t0 + math.ceil(span / chunk - 1e-9) * chunk
    return replace(
        base,
        vehicle=base.vehicle.with_(eps=eps, r=r),
        integration=IntegrationSpec(dt, spec.t0, t1, stride),
        name=f"{base.name}-eps{eps:g}-r{r:g}",
    )
