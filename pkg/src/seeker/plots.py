"""Figures for a finished run: position plane, speed and acceleration."""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .config import Scenario
from .dynamics import closed_loop_rhs
from .field import source_location
from .integrator import Trajectory
from .svg import LinePlot

PLOT_FILES = ("position.svg", "velocity.svg", "acceleration.svg")


class PlotError(ValueError):
    """The run record cannot be plotted."""


def window_means(times, values, width: float, start: float | None = None, stop: float | None = None):
    """Means of ``values`` over consecutive windows ``[a, a + width)``.

    Returns ``(window_starts, means)``; windows without samples are dropped.
    """
    times = np.asarray(times, dtype=np.float64)
    values = np.asarray(values, dtype=np.float64)
    start = times[0] if start is None else start
    stop = times[-1] if stop is None else stop
    edges = np.arange(start, stop - 1e-12, width)
    starts, means = [], []
    for a in edges:
        mask = (times >= a - 1e-12) & (times < a + width - 1e-12)
        if mask.any():
            starts.append(a)
            means.append(values[mask].mean())
    return np.array(starts), np.array(means)


def acceleration(traj: Trajectory, sc: Scenario) -> np.ndarray:
    """``dv/dt`` recomputed from the closed-loop vector field at each sample.

    Noise disturbances are read at the sample time, so with noisy thrust the
    value may differ from the one the integrator used on that step.
    """
    return np.array([
        closed_loop_rhs(t, x, sc.field, sc.disturbance, sc.vehicle)[4]
        for t, x in zip(traj.times, traj.states)
    ])


def build_plots(traj: Trajectory, sc: Scenario) -> dict[str, LinePlot]:
    if len(traj) == 0:
        raise PlotError("trajectory has no samples")
    src = source_location(sc.field)
    tag = f"{sc.name}, r={sc.vehicle.r:g}, eps={sc.vehicle.eps:g}"

    pos = LinePlot(f"Center position ({tag})", "p1", "p2", equal_aspect=True)
    pos.add_series(traj.p[:, 0], traj.p[:, 1], "p(t)")
    pos.add_marker(src[0], src[1], "source")

    vel = LinePlot(f"Forward velocity ({tag})", "t", "v")
    vel.add_series(traj.times, traj.v, "v(t)")

    acc = LinePlot(f"Forward acceleration ({tag})", "t", "dv/dt")
    acc.add_series(traj.times, acceleration(traj, sc), "dv/dt")
    return dict(zip(PLOT_FILES, (pos, vel, acc)))


def write_plots(traj: Trajectory, sc: Scenario, out_dir) -> list[Path]:
    """Render all figures first, then write them, so a failure leaves no partial output."""
    rendered = {name: plot.render() for name, plot in build_plots(traj, sc).items()}
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    for name, text in rendered.items():
        path = out_dir / name
        path.write_text(text, encoding="utf-8")
        paths.append(path)
    return paths
