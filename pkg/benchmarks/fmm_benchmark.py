#!/usr/bin/env python3
"""Benchmark the fast-marching kernels: compiled extension vs pure Python.

Marches |grad u| = sqrt(E - V) for a Gaussian-bump potential from a single
center seed on square grids of increasing size, reports wall time per
kernel, the speedup, and the max value discrepancy (the two kernels are
tie-break-identical, so the discrepancy must be exactly zero).

Usage:
    python benchmarks/fmm_benchmark.py [--sizes 128 256 512] [--repeats 3]
    python benchmarks/fmm_benchmark.py --python-cap 1024   # patience required
"""
from __future__ import annotations

import argparse
import time

import numpy as np

from fluxlines.fmm import available_kernels


def build_problem(n: int):
    h = 2.0 / (n - 1)
    xs = np.linspace(-1.0, 1.0, n)
    X, Y = np.meshgrid(xs, xs, indexing="ij")
    V = 0.9 * np.exp(-((X - 0.2) ** 2 + (Y + 0.1) ** 2) / 0.08)
    f = np.sqrt(np.maximum(1.5 - V, 0.0))
    c = n // 2
    seeds = (np.array([c], dtype=np.int64), np.array([c], dtype=np.int64), np.array([0.0]))
    return f, h, seeds


def time_kernel(kernel, f, h, seeds, repeats: int):
    best = np.inf
    u = None
    for _ in range(repeats):
        t0 = time.perf_counter()
        u, _ = kernel.march(f, h, h, *seeds)
        best = min(best, time.perf_counter() - t0)
    return best, u


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--sizes", type=int, nargs="+", default=[128, 256, 512, 1024])
    parser.add_argument("--repeats", type=int, default=3)
    parser.add_argument(
        "--python-cap", type=int, default=512,
        help="skip the pure-Python kernel above this size (default 512)",
    )
    args = parser.parse_args()

    kernels = available_kernels()
    print(f"kernels available: {', '.join(sorted(kernels))}")
    header = f"{'size':>6} | {'python [s]':>11} | {'compiled [s]':>12} | {'speedup':>8} | {'max |du|':>9}"
    print(header)
    print("-" * len(header))

    for n in args.sizes:
        f, h, seeds = build_problem(n)
        row = {"python": None, "compiled": None}
        us = {}
        for name, kernel in kernels.items():
            if name == "python" and n > args.python_cap:
                continue
            row[name], us[name] = time_kernel(kernel, f, h, seeds, args.repeats)
        py = f"{row['python']:.4f}" if row["python"] is not None else "(skipped)"
        cy = f"{row['compiled']:.4f}" if row["compiled"] is not None else "(n/a)"
        if row["python"] and row["compiled"]:
            speedup = f"{row['python'] / row['compiled']:.1f}x"
        else:
            speedup = "-"
        if len(us) == 2:
            diff = f"{np.max(np.abs(us['python'] - us['compiled'])):.1e}"
        else:
            diff = "-"
        print(f"{n:>6} | {py:>11} | {cy:>12} | {speedup:>8} | {diff:>9}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
