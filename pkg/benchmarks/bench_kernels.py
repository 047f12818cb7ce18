"""Compare the compiled and numpy kernel backends.

Usage: python benchmarks/bench_kernels.py [--batch 200] [--repeat 50] [--gens 300]

Prints per-call time of the batched path objective for each available
backend, the largest disagreement between them, and end-to-end DE
throughput (generations per second) on path18-prescribed.
"""
import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from mechsyn import kernels

E2E = """
import time
from mechsyn import kernels
from mechsyn.de import DEConfig, evolve
from mechsyn.problems import builtin_problem
p = builtin_problem("path18-prescribed")
t = time.perf_counter()
evolve(p.objective, p.bounds, DEConfig(m={m}, g_max={g}, seed=0))
print(kernels.BACKEND, {g} / (time.perf_counter() - t))
"""


def random_batch(n, k, rng):
    params = np.column_stack([
        rng.uniform(-1, 1, (n, 2)), rng.uniform(0.05, 1.5, (n, 4)),
        rng.uniform(-1, 1, (n, 2)), rng.uniform(0, 2 * np.pi, n),
    ])
    return params, rng.uniform(0, 2 * np.pi, (n, k)), rng.random(k), rng.random(k)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--batch", type=int, default=200)
    ap.add_argument("--points", type=int, default=18)
    ap.add_argument("--repeat", type=int, default=50)
    ap.add_argument("--gens", type=int, default=300)
    args = ap.parse_args()

    params, psi, xd, yd = random_batch(args.batch, args.points, np.random.default_rng(0))
    results = {}
    for name in kernels.available_backends():
        mod = kernels.load_backend(name)
        results[name] = mod.path_fob(params, psi, xd, yd, 1e6)
        t = min(timeit.repeat(lambda: mod.path_fob(params, psi, xd, yd, 1e6), number=args.repeat, repeat=3))
        print(f"{name:8s} path_fob  {1e6 * t / args.repeat:9.1f} us per batch of {args.batch}")
    if len(results) == 2:
        diff = np.abs(results["cython"] - results["python"]).max()
        print(f"max backend difference {diff:.2e}")

    for name in kernels.available_backends():
        env = dict(os.environ, MECHSYN_PURE_PYTHON="1" if name == "python" else "0")
        out = subprocess.run([sys.executable, "-c", E2E.format(m=args.batch, g=args.gens)],
                             env=env, capture_output=True, text=True, check=True).stdout.split()
        print(f"{out[0]:8s} evolve    {float(out[1]):9.1f} generations/s (m={args.batch})")


if __name__ == "__main__":
    main()
