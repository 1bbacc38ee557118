"""Scenario execution and on-disk run records."""

from __future__ import annotations

import csv
import json
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field as dc_field
from pathlib import Path

import numpy as np

from . import analysis
from .config import Scenario, load_raw, _build, sweep_scenario
from .integrator import Trajectory, simulate_closed_loop

log = logging.getLogger(__name__)

TRAJECTORY_FILE = "trajectory.csv"
SCENARIO_FILE = "scenario.yaml"
SUMMARY_FILE = "summary.json"
DEFAULT_OUT = "seeker_out"


@dataclass
class RunRecord:
    scenario_hash: str
    run_dir: Path
    reports: list[dict] = dc_field(default_factory=list)
    stats: dict = dc_field(default_factory=dict)

    @property
    def trajectory_path(self) -> Path:
        return self.run_dir / TRAJECTORY_FILE

    @property
    def scenario_path(self) -> Path:
        return self.run_dir / SCENARIO_FILE

    @property
    def summary_path(self) -> Path:
        return self.run_dir / SUMMARY_FILE

    def to_dict(self) -> dict:
        return {
            "scenario_hash": self.scenario_hash,
            "files": {"trajectory": TRAJECTORY_FILE, "scenario": SCENARIO_FILE},
            "reports": self.reports,
            "stats": self.stats,
        }

    @classmethod
    def load(cls, run_dir) -> RunRecord:
        run_dir = Path(run_dir)
        data = json.loads((run_dir / SUMMARY_FILE).read_text(encoding="utf-8"))
        return cls(data["scenario_hash"], run_dir, data["reports"], data["stats"])

    def scenario(self) -> Scenario:
        return _build(load_raw(self.scenario_path))

    def trajectory(self) -> Trajectory:
        sc = self.scenario()
        return Trajectory.from_csv(self.trajectory_path, params=sc.vehicle, disturbance_norms=sc.disturbance.norms)


def default_out_dir(flag: str | None, scenario: Scenario | None = None) -> Path:
    if flag:
        return Path(flag)
    env = os.environ.get("SEEKER_SIM_OUT")
    if env:
        return Path(env)
    if scenario is not None and scenario.output_dir:
        return Path(scenario.output_dir)
    return Path(DEFAULT_OUT)


def summarize(sc: Scenario, traj: Trajectory) -> tuple[list[dict], dict]:
    vp = sc.vehicle
    q = sc.analysis.quadrature
    y_star = sc.y_star()
    trace = analysis.sublevel_trace(traj, sc.field, vp, q, y_star)
    try:
        nu_v = analysis.fit_nu_v(traj, vp)
    except ValueError:
        nu_v = None  # run ends inside the fast transient
    reports = [analysis.check_rotational_bound(traj, vp).summary()]
    stats = {
        "final_p": [float(x) for x in traj.p[-1]],
        "final_p_norm": float(np.linalg.norm(traj.p[-1])),
        "final_psi_avg_minus_y_star": trace.final,
        "sup_v_post_transient": None if nu_v is None else nu_v * vp.eps,
        "nu_v_hat": nu_v,
        "nu_p_hat": trace.max_excursion,
        "y0": float(sc.y0()),
        "y_star": float(y_star),
        "n_samples": len(traj),
    }
    if sc.disturbance.is_zero:
        slow = vp.eps * (traj.times[-1] - traj.times[0] - 5.0 * vp.fast_time_constant)
        if slow > 0:
            stats["prop1_error"] = analysis.prop1_error(traj, sc.field, vp, q, slow_horizon=min(5.0, slow))
    return reports, stats


def run_scenario(sc: Scenario, out_dir, backend: str | None = None) -> RunRecord:
    """Simulate ``sc`` and write trajectory, scenario copy and summary under ``out_dir``."""
    digest = sc.digest()
    run_dir = Path(out_dir) / f"{sc.name}-{digest[:12]}"
    traj = simulate_closed_loop(sc.field, sc.vehicle, sc.initial, sc.integration, sc.disturbance, backend)
    run_dir.mkdir(parents=True, exist_ok=True)
    reports, stats = summarize(sc, traj)
    rec = RunRecord(digest, run_dir, reports, stats)
    traj.to_csv(rec.trajectory_path)
    rec.scenario_path.write_text(sc.dumps(), encoding="utf-8")
    rec.summary_path.write_text(json.dumps(rec.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    log.info("wrote %s", run_dir)
    return rec


def _sweep_worker(args):
    sc, out_dir, backend = args
    rec = run_scenario(sc, out_dir, backend)
    return rec.scenario_hash, str(rec.run_dir), rec.stats


def _cell(value) -> str:
    if value is None:
        return ""
    return value if isinstance(value, str) else f"{value:.17g}"


SWEEP_COLUMNS = ("eps", "r", "scenario_hash", "final_p_norm", "sup_v_post_transient", "nu_v_hat", "prop1_error")


def run_sweep(base: Scenario, out_dir, workers: int | None = None, backend: str | None = None) -> list[dict]:
    """Run ``base`` over its ``eps_sweep x r_sweep`` grid; rows come back in grid order."""
    out_dir = Path(out_dir)
    points = [(e, r) for r in base.analysis.r_sweep for e in base.analysis.eps_sweep]
    jobs = [(sweep_scenario(base, e, r), out_dir, backend) for e, r in points]
    workers = max(1, min(workers or os.cpu_count() or 1, len(jobs)))
    if workers == 1:
        results = [_sweep_worker(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_sweep_worker, jobs))
    rows = []
    for (e, r), (digest, run_dir, stats) in zip(points, results):
        rows.append({
            "eps": e, "r": r, "scenario_hash": digest, "run_dir": run_dir,
            "final_p_norm": stats["final_p_norm"],
            "sup_v_post_transient": stats["sup_v_post_transient"],
            "nu_v_hat": stats["nu_v_hat"],
            "prop1_error": stats.get("prop1_error", ""),
        })
    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / f"{base.name}-sweep.csv", "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SWEEP_COLUMNS)
        for row in rows:
            w.writerow([_cell(row[c]) for c in SWEEP_COLUMNS])
    return rows
