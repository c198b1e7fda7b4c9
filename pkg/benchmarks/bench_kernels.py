"""Time the compiled kernels against the plain-numpy fallback.

Each backend runs in its own interpreter because ``SAFLOW_NUMBA`` is read
at import time.  Every workload is run once untimed so that numba
compilation is not counted.

    python benchmarks/bench_kernels.py --repeat 3 --m 128
"""

import argparse
import json
import os
import subprocess
import sys

WORKER = r"""
import json, sys, time
from saflow import _accel
from saflow.filament import evolve_filament, planar_circle
from saflow.flow import FlowParams, StepperConfig, evolve, stability_dt
from saflow.hasimoto import parallel_frame
from saflow.initial import make_initial_data
from saflow.loopfield import GridSpec
from saflow.manifold import PoincareDisk, Sphere2
from saflow.scalarpde import ScalarParams, evolve_scalar

m, steps, repeat = (int(v) for v in sys.argv[1:4])
grid = GridSpec(m)
p = FlowParams(1, 1)
cfg = StepperConfig(steps * stability_dt(p, grid), energy_stride=10**9, snapshot_stride=10**9)
sphere = make_initial_data("perturbed-latitude(0.8, 0.1, 3)", grid, Sphere2())
disk = make_initial_data("perturbed-latitude(0.5, 0.05, 2)", grid, PoincareDisk())
circle = planar_circle(grid)
psi = make_initial_data("gauss-packet(0.5, 0.6, 1)", grid)

work = {
    "sphere flow": lambda: evolve(sphere, p, cfg),
    "disk flow": lambda: evolve(disk, p, cfg),
    "filament": lambda: evolve_filament(circle, 1.0, 1.0, cfg),
    "scalar": lambda: evolve_scalar(psi, ScalarParams(1, 0.5, 0.3, 1), StepperConfig(steps * 1e-3)),
    "parallel frame": lambda: [parallel_frame(sphere) for _ in range(20)],
}
out = {"backend": _accel.backend_name(), "times": {}}
for name, fn in work.items():
    fn()
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    out["times"][name] = best
print(json.dumps(out))
"""


def run_backend(flag, m, steps, repeat):
    env = dict(os.environ, SAFLOW_NUMBA=flag)
    proc = subprocess.run(
        [sys.executable, "-c", WORKER, str(m), str(steps), str(repeat)],
        capture_output=True, text=True, env=env, check=True,
    )
    return json.loads(proc.stdout)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--m", type=int, default=128, help="grid size")
    ap.add_argument("--steps", type=int, default=200, help="time steps per workload")
    ap.add_argument("--repeat", type=int, default=3, help="timed repetitions (best is reported)")
    args = ap.parse_args(argv)

    fast = run_backend("1", args.m, args.steps, args.repeat)
    slow = run_backend("0", args.m, args.steps, args.repeat)
    print(f"m = {args.m}, {args.steps} steps, best of {args.repeat}")
    print(f"{'workload':<16}{fast['backend']:>12}{slow['backend']:>12}{'speedup':>10}")
    for name, t_fast in fast["times"].items():
        t_slow = slow["times"][name]
        print(f"{name:<16}{t_fast:>11.4f}s{t_slow:>11.4f}s{t_slow / t_fast:>9.1f}x")


if __name__ == "__main__":
    main()
