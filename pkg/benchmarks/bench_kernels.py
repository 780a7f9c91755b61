#!/usr/bin/env python3
"""Benchmark the compiled rigid-body kernels against the pure-numpy fallback.

Times the four hot kernels on the default chain over random states, then a
short closed-loop run under each backend. Run from the repo root:

    python benchmarks/bench_kernels.py [--trials 2000]
"""

import argparse
import importlib
import time

import numpy as np

from wbctl import _kernels_py
from wbctl.chain import named_chain

try:
    from wbctl import _speedups
except ImportError:
    _speedups = None


def time_kernel(fn, args_list, repeats=3):
    best = np.inf
    for _ in range(repeats):
        start = time.perf_counter()
        for args in args_list:
            fn(*args)
        best = min(best, time.perf_counter() - start)
    return best / len(args_list)


def bench_kernels(trials: int):
    chain = named_chain("default")
    packed = chain.packed
    n = chain.arm_dofs
    rng = np.random.default_rng(0)
    qs = rng.uniform(-1.4, 1.4, (trials, n))
    qds = rng.uniform(-1.0, 1.0, (trials, n))
    qdds = rng.uniform(-1.0, 1.0, (trials, n))
    grav = chain.gravity

    cases = {
        "ee_pose": [(packed, q) for q in qs],
        "jacobian_arm": [(packed, q) for q in qs],
        "mass_matrix_arm": [(packed, q) for q in qs],
        "rnea_arm": [(packed, q, qd, qdd, grav) for q, qd, qdd in zip(qs, qds, qdds)],
    }
    backends = [("python", _kernels_py)]
    if _speedups is not None:
        backends.append(("compiled", _speedups))

    print(f"{'kernel':<18}" + "".join(f"{name:>14}" for name, _ in backends) +
          ("{:>10}".format("speedup") if len(backends) == 2 else ""))
    for kernel, args_list in cases.items():
        per_call = [time_kernel(getattr(mod, kernel), args_list) for _, mod in backends]
        row = f"{kernel:<18}" + "".join(f"{t * 1e6:>11.1f} us" for t in per_call)
        if len(per_call) == 2:
            row += f"{per_call[0] / per_call[1]:>9.1f}x"
        print(row)


def bench_closed_loop():
    import os
    import subprocess
    import sys

    # guide the robot from the start so every tick computes fresh dynamics
    # (a static segment would be absorbed by the per-configuration memo)
    code = (
        "import time, numpy as np, wbctl.simulator as sim, wbctl.scenarios as S;"
        "from wbctl.kernels import backend_name;"
        "sc = S.scripted_phase1(duration=2.0);"
        "sc.buttons = [(0.01, 1), (0.02, 4)];"
        "sc.wrench_profile = np.array([[0.0, 0, 0, 0, 0, 0, 0], [0.1, 10, 3, 0, 0, 0, 0.2]]);"
        "t0 = time.perf_counter(); sim.run(sc);"
        "print(f'{backend_name()}: {time.perf_counter() - t0:.3f} s for 2 s simulated')"
    )
    print("\nclosed-loop (guided run, 2 simulated seconds):", flush=True)
    for env_value in ("", "1"):
        env = dict(os.environ, WBCTL_PURE_PYTHON=env_value)
        if not env_value:
            env.pop("WBCTL_PURE_PYTHON")
        subprocess.run([sys.executable, "-c", code], env=env, check=True)


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--trials", type=int, default=2000)
    parser.add_argument("--skip-loop", action="store_true")
    args = parser.parse_args()
    if _speedups is None:
        print("compiled backend not importable; timing the fallback only")
    bench_kernels(args.trials)
    if not args.skip_loop:
        bench_closed_loop()


if __name__ == "__main__":
    main()
