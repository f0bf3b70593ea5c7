#!/usr/bin/env python3
"""Benchmark the hot kernels on both backends (numba @njit vs pure numpy).

Usage: python benchmarks/bench_kernels.py [--repeats N]
"""

import argparse
import time

import numpy as np

from rslimits import _kernels, channel, oracle, priors, solver
from rslimits.potential import ModelSpec
from rslimits.quadrature import gauss_hermite


def timeit(fn, repeats):
    fn()  # warm-up (numba compilation, caches)
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def bench_channel(repeats):
    rng = np.random.default_rng(0)
    atoms = rng.uniform(-1.5, 1.5, size=(4, 2))
    w = np.full(4, 0.25)
    prior = priors.discrete(atoms, w)
    s = 0.2 * np.eye(2)
    r = 0.8 * np.eye(2)
    quad = gauss_hermite(63)
    return timeit(lambda: channel.mmse_matrix(prior, s, r, quad), repeats)


def bench_enumeration(repeats):
    m = ModelSpec(1, ([[1.0]],), [[0.2]], priors.rademacher())
    inst = oracle.sample_instance(m, 10, seed=1)
    configs = oracle.enumerate_configs(2, 10)
    T1, u1, E, _ = oracle._instance_terms(inst)
    return timeit(lambda: _kernels.config_quadratic_terms(configs, T1, u1, E), repeats)


def bench_marginals(repeats):
    configs = oracle.enumerate_configs(2, 10)
    p = np.full(configs.shape[0], 1.0 / configs.shape[0])
    return timeit(lambda: _kernels.config_row_marginals(configs, p, 2), repeats)


def bench_solve(repeats):
    m = ModelSpec(1, ([[1.0]],), [[0.1]], priors.rademacher())
    settings = solver.SolveSettings(tol=1e-10, max_iters=5000)
    return timeit(lambda: solver.solve_f(m, settings), max(1, repeats // 4))


BENCHES = [
    ("channel mmse (d=2, K=4, 63^2 nodes)", bench_channel),
    ("posterior enumeration (n=10, 2^10 configs)", bench_enumeration),
    ("row marginals (n=10, 2^10 configs)", bench_marginals),
    ("end-to-end solve_f (d=1 Rademacher)", bench_solve),
]


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--repeats", type=int, default=20)
    args = parser.parse_args()

    backends = ["numpy"] + (["numba"] if _kernels.HAVE_NUMBA else [])
    results = {}
    for backend in backends:
        _kernels.set_backend(backend)
        for name, fn in BENCHES:
            results[(backend, name)] = fn(args.repeats)

    width = max(len(name) for name, _ in BENCHES)
    header = f"{'kernel':<{width}}  " + "".join(f"{b:>12}" for b in backends)
    if len(backends) == 2:
        header += f"{'speedup':>10}"
    print(header)
    print("-" * len(header))
    for name, _ in BENCHES:
        row = f"{name:<{width}}  "
        for b in backends:
            row += f"{results[(b, name)] * 1e3:>10.3f}ms"
        if len(backends) == 2:
            row += f"{results[('numpy', name)] / results[('numba', name)]:>9.1f}x"
        print(row)


if __name__ == "__main__":
    main()
