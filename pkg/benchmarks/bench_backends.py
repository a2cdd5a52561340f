#!/usr/bin/env python3
"""Benchmark the compiled sampling kernels against the pure-Python fallback.

Both backends produce bit-identical streams; this script measures the speed
gap on the workloads that matter: raw stream fills, Bernoulli sampling, RBM
CD-1 training, and an AIS run. Usage:

    python benchmarks/bench_backends.py [--quick]
"""

import argparse
import time

import numpy as np

import dbnf0.dbn as dbn_mod
import dbnf0.numerics as numerics
from dbnf0 import _sampling_py
from dbnf0.dbn import AisConfig, ais_log_partition
from dbnf0.numerics import Rng, multi_stream_states
from dbnf0.rbm import RbmParams, RbmTrainConfig, train_rbm

try:
    from dbnf0 import _sampling_ext
except ImportError:
    _sampling_ext = None

BACKENDS = [("py", _sampling_py)] + \
    ([("ext", _sampling_ext)] if _sampling_ext else [])


def use_backend(kernels):
    # numerics and dbn both bind the kernels module at import time
    numerics.kernels = kernels
    dbn_mod.kernels = kernels


def timeit(fn, repeats=3):
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - start)
    return best


def bench_uniform(kernels, n):
    states = multi_stream_states(1, 4)
    out = np.empty((4, n // 4))
    return timeit(lambda: kernels.fill_uniform(states, out))


def bench_normal(kernels, n):
    states = multi_stream_states(2, 4)
    out = np.empty((4, n // 4))
    return timeit(lambda: kernels.fill_normal(states, out))


def bench_bernoulli(kernels, n):
    states = multi_stream_states(3, 4)
    p = np.full((4, n // 4), 0.3)
    out = np.empty_like(p)
    return timeit(lambda: kernels.fill_bernoulli(states, p, out))


def bench_rbm_training(kernels, epochs):
    use_backend(kernels)
    data = (np.random.default_rng(0).uniform(size=(512, 220)) < 0.06).astype(float)
    cfg = RbmTrainConfig(epochs=epochs, seed=1)
    return timeit(lambda: train_rbm(data, 220, 80, cfg), repeats=1)


def bench_ais(kernels):
    use_backend(kernels)
    rng = np.random.default_rng(5)
    params = RbmParams(rng.normal(scale=0.5, size=(6, 4)),
                       rng.normal(scale=0.5, size=6),
                       rng.normal(scale=0.5, size=4))
    cfg = AisConfig(num_temperatures=1000, num_runs=100, seed=2)
    return timeit(lambda: ais_log_partition(params, cfg), repeats=1)


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--quick", action="store_true",
                        help="smaller workloads for a fast smoke run")
    args = parser.parse_args()

    n = 200_000 if args.quick else 2_000_000
    epochs = 2 if args.quick else 10
    cases = [
        (f"uniform fill ({n:,} draws)", lambda k: bench_uniform(k, n)),
        (f"normal fill ({n:,} draws)", lambda k: bench_normal(k, n)),
        (f"bernoulli fill ({n:,} draws)", lambda k: bench_bernoulli(k, n)),
        (f"RBM CD-1 train (512x220->80, {epochs} epochs)",
         lambda k: bench_rbm_training(k, epochs)),
        ("AIS run (V=6 H=4, 1000 temps x 100 runs)", bench_ais),
    ]

    if _sampling_ext is None:
        print("compiled backend unavailable; showing pure-Python times only")
    width = max(len(name) for name, _ in cases)
    header = f"{'case':<{width}}  " + "".join(f"{n:>12}" for n, _ in BACKENDS)
    if len(BACKENDS) == 2:
        header += f"{'speedup':>10}"
    print(header)
    for name, bench in cases:
        times = []
        for _, kernels in BACKENDS:
            times.append(bench(kernels))
        row = f"{name:<{width}}  " + "".join(f"{t * 1e3:>10.1f}ms" for t in times)
        if len(times) == 2:
            row += f"{times[0] / times[1]:>9.1f}x"
        print(row)
    use_backend(BACKENDS[-1][1])


if __name__ == "__main__":
    main()
