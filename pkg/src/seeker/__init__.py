"""Source seeking with a force/torque-actuated unicycle and a displaced sensor."""

from .averaging import QuadratureSpec, g_bar, g_tilde, psi_avg, time_average_g_tilde
from .config import Scenario, load, load_bundled
from .dynamics import BoundedSignal, DisturbanceTriple, UnicycleState, VehicleParams, closed_loop_rhs
from .field import ScalarField, ScalarField1D, evaluate, gradient
from .integrator import (
    COMPILED_AVAILABLE,
    IntegrationSpec,
    NumericalAbort,
    Trajectory,
    simulate_averaged,
    simulate_closed_loop,
)

__version__ = "0.1.0"

__all__ = [
    "BoundedSignal",
    "COMPILED_AVAILABLE",
    "DisturbanceTriple",
    "IntegrationSpec",
    "NumericalAbort",
    "QuadratureSpec",
    "ScalarField",
    "ScalarField1D",
    "Scenario",
    "Trajectory",
    "UnicycleState",
    "VehicleParams",
    "closed_loop_rhs",
    "evaluate",
    "g_bar",
    "g_tilde",
    "gradient",
    "load",
    "load_bundled",
    "psi_avg",
    "simulate_averaged",
    "simulate_closed_loop",
    "time_average_g_tilde",
]
