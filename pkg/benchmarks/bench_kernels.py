#!/usr/bin/env python3
"""Benchmark the compiled kernels against the NumPy fallback.

Times the two hot kernels (batch top-k support selection and per-column
gradient accumulation) at the scale the multi-sample driver uses, plus a
larger configuration, and an end-to-end multi-sample refinement run under
each backend.

Run: python benchmarks/bench_kernels.py
"""

from __future__ import annotations

import time

import numpy as np

from conceptrefine import (GenerativeParams, RefinementConfig, draw_samples,
                           perturb_dictionary, random_orthonormal)
from conceptrefine import _kernels, optimizer
from conceptrefine._kernels import pyref

try:
    from conceptrefine._kernels import _fast
except ImportError:
    _fast = None


def bench(fn, *args, repeat=7):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def kernel_case(m, n, d, k, seed):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((m, d))
    D = rng.standard_normal((d, n))
    B = rng.standard_normal((m, n))
    R = np.ascontiguousarray(X @ D)
    scores = np.abs(R)
    supports = pyref.topk_supports(scores, k)
    return scores, R, B, supports, np.ascontiguousarray(X)


def run_kernel_benchmarks():
    print(f"{'kernel':<14} {'size':<24} {'numpy':>10} {'compiled':>10} {'speedup':>8}")
    print("-" * 70)
    for (m, n, d, k) in [(5000, 10, 10, 5), (20000, 128, 64, 10)]:
        scores, R, B, supports, X = kernel_case(m, n, d, k, 0)
        size = f"m={m} n={n} d={d} k={k}"

        t_py = bench(pyref.topk_supports, scores, k)
        t_cy = bench(_fast.topk_supports, scores, k) if _fast else float("nan")
        print(f"{'topk_supports':<14} {size:<24} {t_py * 1e3:9.2f}ms "
              f"{t_cy * 1e3:9.2f}ms {t_py / t_cy:7.1f}x" if _fast else
              f"{'topk_supports':<14} {size:<24} {t_py * 1e3:9.2f}ms "
              f"{'n/a':>10} {'':>8}")

        t_py = bench(pyref.column_grads, R, B, supports, X)
        t_cy = (bench(_fast.column_grads, R, B, supports, X)
                if _fast else float("nan"))
        print(f"{'column_grads':<14} {size:<24} {t_py * 1e3:9.2f}ms "
              f"{t_cy * 1e3:9.2f}ms {t_py / t_cy:7.1f}x" if _fast else
              f"{'column_grads':<14} {size:<24} {t_py * 1e3:9.2f}ms "
              f"{'n/a':>10} {'':>8}")


def run_end_to_end():
    params = GenerativeParams(d=10, n=10, k=5, gamma=0.5, gamma_max=1.0)
    dstar = random_orthonormal(10, 10, 1)
    dinit = perturb_dictionary(dstar, 0.027, 2)
    samples = draw_samples(dstar, params, 5000, 3)
    cfg = RefinementConfig(eta=0.1, rho=0.027, iters=100, k=5)

    import warnings

    def drive():
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            optimizer.run_multi_sample(dstar, dinit, samples, cfg)

    backends = [("numpy", pyref)]
    if _fast is not None:
        backends.append(("compiled", _fast))
    print()
    print("end-to-end multi-sample refinement (m=5000, T=100):")
    saved = (optimizer._kernels.topk_supports, optimizer._kernels.column_grads)
    try:
        for name, impl in backends:
            optimizer._kernels.topk_supports = impl.topk_supports
            optimizer._kernels.column_grads = impl.column_grads
            t = bench(drive, repeat=3)
            print(f"  {name:<10} {t:8.3f}s")
    finally:
        optimizer._kernels.topk_supports, optimizer._kernels.column_grads = saved


if __name__ == "__main__":
    print(f"active backend: {_kernels.BACKEND}")
    if _fast is None:
        print("compiled extension not importable; numpy timings only")
    run_kernel_benchmarks()
    run_end_to_end()
