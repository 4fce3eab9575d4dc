"""Compare the compiled and numpy batch kernels.

Usage: ``python benchmarks/bench_kernels.py [--N 16] [--K 32] [--repeat 5]``.
Prints the best-of-``repeat`` time per batch and the speedup.
"""

import argparse
import time

import numpy as np

from snrloss import kernels
from snrloss.distributions import Rng
from snrloss.scenarios import jammer_sigma, ula_steering


def best_time(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--N", type=int, default=16)
    ap.add_argument("--K", type=int, default=32)
    ap.add_argument("--sizes", type=int, nargs="+", default=[10, 100, 1000, 10000])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)

    backends = kernels.available_backends()
    sigma, _ = jammer_sigma(args.N)
    v = ula_steering(args.N, 0.0)
    print(f"N={args.N} K={args.K} backends={backends} active={kernels.BACKEND}")
    print(f"{'batch':>7} " + " ".join(f"{b + ' [ms]':>14}" for b in backends) + "  speedup")
    for M in args.sizes:
        X = Rng(1).cnormal((M, args.N, args.K))
        times = {}
        for b in backends:
            times[b] = best_time(lambda: kernels.loaded_smi_batch(X, v, sigma, backend=b), args.repeat)
        ref = kernels.loaded_smi_batch(X, v, sigma, backend="numpy")[0]
        for b in backends:
            got = kernels.loaded_smi_batch(X, v, sigma, backend=b)[0]
            assert np.max(np.abs(got - ref)) < 1e-12
        speed = times["numpy"] / times["cython"] if "cython" in times else float("nan")
        print(f"{M:>7} " + " ".join(f"{1e3 * times[b]:>14.3f}" for b in backends) + f"  {speed:6.2f}x")


if __name__ == "__main__":
    main()
