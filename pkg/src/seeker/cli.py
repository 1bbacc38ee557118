"""Command-line entry point.

Exit codes: 0 success, 1 verification failure, 2 usage or configuration
error, 3 numerical abort.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import config, runner
from .averaging import psi_avg
from .config import ConfigError
from .field import evaluate
from .integrator import NumericalAbort
from .verify import SUITES, run_suite

EXIT_OK, EXIT_VERIFY, EXIT_USAGE, EXIT_ABORT = 0, 1, 2, 3

log = logging.getLogger("seeker")


class UsageError(Exception):
    pass


def _common(p: argparse.ArgumentParser, config_required: bool = True) -> None:
    p.add_argument("--config", required=config_required, metavar="PATH",
                   help="scenario file, or the name of a bundled scenario (ring_r02, ring_r01)")
    p.add_argument("--out", metavar="DIR", help="output directory (default: $SEEKER_SIM_OUT, then ./seeker_out)")
    p.add_argument("--seed", type=int, help="override the scenario seed")
    p.add_argument("--dt", type=float, help="override the integration step")
    p.add_argument("--eps", type=float, help="override the time-scale parameter eps")
    p.add_argument("--r", type=float, help="override the sensor offset r")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="seeker", description="Unicycle source-seeking simulator and checks.")
    ap.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    ap.add_argument("--backend", choices=("compiled", "python"), help="closed-loop kernel (default: compiled if built)")
    sub = ap.add_subparsers(dest="verb", required=True)

    p = sub.add_parser("run", help="simulate one scenario")
    _common(p)

    p = sub.add_parser("landscape", help="tabulate the field and its disk averages")
    _common(p)
    p.add_argument("--axis", action="append", metavar="SPEC",
                   help="p1=LO:HI:N or p1=VALUE (likewise p2); default p1=-4:0:401 p2=0")

    p = sub.add_parser("verify", help="run a verification suite")
    p.add_argument("suite", choices=SUITES)
    _common(p, config_required=False)

    p = sub.add_parser("plot", help="write SVG figures for a run directory")
    p.add_argument("run_dir", help="directory written by 'seeker run'")
    p.add_argument("--out", metavar="DIR", help="where to write the SVGs (default: the run directory)")

    p = sub.add_parser("sweep", help="run the eps x r sweep of a scenario")
    _common(p)
    p.add_argument("--workers", type=int, default=None, help="worker processes (default: CPU count)")
    return ap


def _scenario(args) -> config.Scenario:
    return config.load(config.resolve(args.config), seed=args.seed, dt=args.dt, eps=args.eps, r=args.r)


def parse_axis(specs: list[str] | None) -> np.ndarray:
    """Axis flags to a ``(n, 2)`` array of points, ``p1`` varying slowest."""
    axes = {"p1": np.linspace(-4.0, 0.0, 401), "p2": np.array([0.0])}
    for spec in specs or []:
        name, sep, rhs = spec.partition("=")
        if not sep or name not in axes:
            raise UsageError(f"bad axis spec {spec!r}; expected p1=LO:HI:N or p2=VALUE")
        parts = rhs.split(":")
        try:
            if len(parts) == 1:
                axes[name] = np.array([float(parts[0])])
            elif len(parts) == 3:
                n = int(parts[2])
                if n < 1:
                    raise ValueError
                axes[name] = np.linspace(float(parts[0]), float(parts[1]), n)
            else:
                raise ValueError
        except ValueError:
            raise UsageError(f"bad axis spec {spec!r}; expected p1=LO:HI:N or p2=VALUE") from None
    g1, g2 = np.meshgrid(axes["p1"], axes["p2"], indexing="ij")
    return np.column_stack([g1.ravel(), g2.ravel()])


def cmd_run(args) -> int:
    sc = _scenario(args)
    rec = runner.run_scenario(sc, runner.default_out_dir(args.out, sc), args.backend)
    print(f"run_dir: {rec.run_dir}")
    print(f"scenario_hash: {rec.scenario_hash}")
    print(f"final |p|: {rec.stats['final_p_norm']:.6g}")
    print(f"final Psi_r - y*: {rec.stats['final_psi_avg_minus_y_star']:.6g}")
    sup_v = rec.stats["sup_v_post_transient"]
    print(f"sup |v| after transient: {'n/a' if sup_v is None else f'{sup_v:.6g}'}")
    return EXIT_OK


def cmd_landscape(args) -> int:
    sc = _scenario(args)
    pts = parse_axis(args.axis)
    radii = sorted(set(sc.analysis.r_sweep) | {sc.vehicle.r})
    cols = [pts[:, 0], pts[:, 1], np.asarray(evaluate(sc.field, pts))]
    cols += [np.asarray(psi_avg(sc.field, pts, r, sc.analysis.quadrature)) for r in radii]
    header = ",".join(["p1", "p2", "psi"] + [f"Psi_r{r:g}" for r in radii])
    out_dir = runner.default_out_dir(args.out, sc)
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / f"{sc.name}-landscape.csv"
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        np.savetxt(fh, np.column_stack(cols), fmt="%.17g", delimiter=",", header=header, comments="")
    print(path)
    return EXIT_OK


def cmd_verify(args) -> int:
    base = _scenario(args) if args.config else None
    if base is None and any(v is not None for v in (args.seed, args.dt, args.eps, args.r)):
        base = config.load(config.bundled_path("ring_r02"), seed=args.seed, dt=args.dt, eps=args.eps, r=args.r)
    res = run_suite(args.suite, base)
    text = json.dumps(res.to_dict(), indent=2, sort_keys=True)
    print(text)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / f"verify-{args.suite}.json").write_text(text + "\n", encoding="utf-8")
    for c in res.checks:
        print(f"{'PASS' if c.passed else 'FAIL'} {c.name}: {c.value:.6g} (threshold {c.threshold:g})", file=sys.stderr)
    return EXIT_OK if res.passed else EXIT_VERIFY


def cmd_plot(args) -> int:
    from .plots import PlotError, write_plots

    run_dir = Path(args.run_dir)
    rec = runner.RunRecord("", run_dir)
    if not rec.trajectory_path.is_file():
        raise UsageError(f"no trajectory file at {rec.trajectory_path}")
    if not rec.scenario_path.is_file():
        raise UsageError(f"no scenario file at {rec.scenario_path}")
    try:
        traj = rec.trajectory()
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    try:
        paths = write_plots(traj, rec.scenario(), args.out or run_dir)
    except PlotError as exc:
        raise UsageError(str(exc)) from None
    for path in paths:
        print(path)
    return EXIT_OK


def cmd_sweep(args) -> int:
    if args.workers is not None and args.workers < 1:
        raise UsageError("--workers must be at least 1")
    sc = _scenario(args)
    out_dir = runner.default_out_dir(args.out, sc)
    rows = runner.run_sweep(sc, out_dir, args.workers, args.backend)
    for row in rows:
        print(f"eps={row['eps']:g} r={row['r']:g} final|p|={row['final_p_norm']:.6g} run_dir={row['run_dir']}")
    print(out_dir / f"{sc.name}-sweep.csv")
    return EXIT_OK


COMMANDS = {"run": cmd_run, "landscape": cmd_landscape, "verify": cmd_verify, "plot": cmd_plot, "sweep": cmd_sweep}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.verb](args)
    except (ConfigError, UsageError) as exc:
        print(f"seeker: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericalAbort as exc:
        print(f"seeker: numerical abort: {exc}", file=sys.stderr)
        return EXIT_ABORT


if __name__ == "__main__":
    sys.exit(main())
