"""Time the numba kernels against the pure-numpy fallback.

Each backend runs in its own interpreter, since the choice is made at import
time from WRIGHTKERNEL_DISABLE_NUMBA.  "cold" includes import and JIT/cache
load, "warm" is the best of several repeats inside one process.

    python3 benchmarks/bench_backends.py [--repeats 5]
"""

import argparse
import json
import os
import subprocess
import sys

WORKER = r"""
import json, sys, time
t0 = time.perf_counter()
import numpy as np
from wrightkernel import IntervalUnion, KernelParams, fredholm_det, gap_probability
from wrightkernel import _accel
from wrightkernel.kernel import kernel_tilde_matrix
from wrightkernel.ode_gap import gap_curve_ode

p = KernelParams(1, 2, 1)
xs = np.linspace(0.01, 3.0, 400)
J = IntervalUnion((0.2, 0.6, 1.0, 1.5))

jobs = {
    "kernel matrix 400x400": lambda: kernel_tilde_matrix(p, xs, xs),
    "fredholm det, order 64": lambda: fredholm_det(p, J, 64),
    "gap curve, 26 points": lambda: [gap_probability(p, s) for s in np.linspace(0.0, 5.0, 26)],
    "ode trajectory to s=5": lambda: gap_curve_ode(p, np.linspace(0.0, 5.0, 26)),
}
first = {}
for name, job in jobs.items():
    t = time.perf_counter(); job(); first[name] = time.perf_counter() - t
cold = time.perf_counter() - t0
warm = {}
for name, job in jobs.items():
    best = float("inf")
    for _ in range(int(sys.argv[1])):
        t = time.perf_counter(); job(); best = min(best, time.perf_counter() - t)
    warm[name] = best
print(json.dumps({"backend": _accel.BACKEND, "cold": cold, "first": first, "warm": warm}))
"""


def run(disable: bool, repeats: int) -> dict:
    env = dict(os.environ)
    env.pop("WRIGHTKERNEL_DISABLE_NUMBA", None)
    if disable:
        env["WRIGHTKERNEL_DISABLE_NUMBA"] = "1"
    out = subprocess.run([sys.executable, "-c", WORKER, str(repeats)], env=env,
                         capture_output=True, text=True, check=True)
    return json.loads(out.stdout.strip().splitlines()[-1])


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args()
    fast = run(False, args.repeats)
    plain = run(True, args.repeats)
    print(f"{'job':<26}{fast['backend'] + ' warm':>14}{plain['backend'] + ' warm':>14}{'speedup':>10}")
    for name in fast["warm"]:
        a, b = fast["warm"][name], plain["warm"][name]
        print(f"{name:<26}{a:>13.4f}s{b:>13.4f}s{b / a:>9.1f}x")
    print(f"{'cold start (all jobs)':<26}{fast['cold']:>13.3f}s{plain['cold']:>13.3f}s")


if __name__ == "__main__":
    main()
