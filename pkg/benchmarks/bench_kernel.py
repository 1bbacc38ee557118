"""Compare the compiled closed-loop kernel with the pure-Python fallback.

Run from the repository root::

    python benchmarks/bench_kernel.py [--steps N] [--repeat R]

Both backends integrate the same ring-field scenario and must agree bitwise.
"""

import argparse
import time

import numpy as np

from seeker import config
from seeker.integrator import COMPILED_AVAILABLE, IntegrationSpec, simulate_closed_loop


def timed(backend, sc, spec, repeat):
    best, traj = float("inf"), None
    for _ in range(repeat):
        t0 = time.perf_counter()
        traj = simulate_closed_loop(sc.field, sc.vehicle, sc.initial, spec, sc.disturbance, backend)
        best = min(best, time.perf_counter() - t0)
    return best, traj


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--steps", type=int, default=20000, help="RK4 steps for the pure-Python run")
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    sc = config.load_bundled("ring_r02")
    spec = IntegrationSpec(1e-3, 0.0, args.steps * 1e-3, 100)
    py_time, py_traj = timed("python", sc, spec, args.repeat)
    print(f"python   : {args.steps} steps in {py_time:.3f}s ({1e6 * py_time / args.steps:.2f} us/step)")
    if not COMPILED_AVAILABLE:
        print("compiled : not built")
        return
    c_time, c_traj = timed("compiled", sc, spec, args.repeat)
    print(f"compiled : {args.steps} steps in {c_time:.4f}s ({1e6 * c_time / args.steps:.3f} us/step)")
    print(f"speed-up : {py_time / c_time:.0f}x, identical output: {np.array_equal(py_traj.states, c_traj.states)}")
    full = IntegrationSpec(1e-3, 0.0, 500.0, 100)
    f_time, _ = timed("compiled", sc, full, args.repeat)
    print(f"compiled : full 500-unit reference run (500000 steps) in {f_time:.3f}s")


if __name__ == "__main__":
    main()
