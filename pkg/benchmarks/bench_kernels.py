"""Compare the numba and numpy kernels for tensor assembly and RHS evaluation.

Run with ``python benchmarks/bench_kernels.py [--M0 4 6 8] [--eta 10]``.
Prints one line per (kernel, M0) with both timings and the max difference.
"""
import argparse
import time

import numpy as np

from hermite_boltzmann.collision_models import quadratic_rhs
from hermite_boltzmann.collision_tensor import assemble, gamma_table
from hermite_boltzmann.ipl_kernel import kernel_model


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def main(argv=None):
    ap = argparse.ArgumentParser()
    ap.add_argument("--M0", type=int, nargs="+", default=[4, 6, 8])
    ap.add_argument("--eta", type=float, default=10.0)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    model = kernel_model(args.eta)
    rng = np.random.default_rng(1)
    # compile once so the first timing does not include JIT cost
    assemble(args.eta, 2, model, numba=True)
    print(f"{'kernel':<10}{'M0':>4}{'N':>6}{'numba [s]':>14}{'numpy [s]':>14}{'max diff':>12}")
    for M0 in args.M0:
        gamma = gamma_table(model, M0)
        tn, a = best_of(lambda: assemble(args.eta, M0, model, numba=True, gamma=gamma),
                        args.repeat)
        tp, b = best_of(lambda: assemble(args.eta, M0, model, numba=False, gamma=gamma),
                        args.repeat)
        diff = np.max(np.abs(a.dense() - b.dense())) if a.size <= 120 else float("nan")
        print(f"{'assemble':<10}{M0:>4}{a.size:>6}{tn:>14.4f}{tp:>14.4f}{diff:>12.2e}")
        f = rng.standard_normal(a.size) * 0.1
        f[0] = 1.0
        quadratic_rhs(a, f, numba=True)
        reps = max(args.repeat, 20)
        tn, qa = best_of(lambda: quadratic_rhs(a, f, numba=True), reps)
        tp, qb = best_of(lambda: quadratic_rhs(a, f, numba=False), reps)
        print(f"{'rhs':<10}{M0:>4}{a.size:>6}{tn:>14.6f}{tp:>14.6f}"
              f"{np.max(np.abs(qa - qb)):>12.2e}")


if __name__ == "__main__":
    main()
