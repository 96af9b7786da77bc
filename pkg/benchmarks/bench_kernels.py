#!/usr/bin/env python3
"""Benchmark the compiled search kernel against the pure-Python twin.

Runs the share solver's composition search on representative workloads
through both backends and reports wall times and the speedup. Invoke
from the repository root:

    python3 benchmarks/bench_kernels.py [--repeat N]
"""

from __future__ import annotations

import argparse
import random
import statistics
import time

from mmsvote import _kernels_py, kernels
from mmsvote.model import PreferenceMatrix
from mmsvote.shares import _items_cap, _solver_items

try:
    from mmsvote import _kernels
except ImportError:
    _kernels = None


def workloads():
    rng = random.Random(20240817)
    cases = []

    def add(label, matrix, agent):
        _, items = _solver_items(matrix, agent)
        counts = tuple(c for c, _ in items)
        masks = tuple(m for _, m in items)
        cases.append((label, counts, masks, matrix.n, _items_cap(matrix.n, items)))

    M = PreferenceMatrix.from_rows(
        [tuple(rng.randint(0, 1) for _ in range(12)) for _ in range(4)]
    )
    add("random 4x12, agent 1", M, 0)
    M = PreferenceMatrix.from_rows(
        [tuple(rng.randint(0, 1) for _ in range(11)) for _ in range(4)]
    )
    add("random 4x11, agent 3", M, 2)
    M = PreferenceMatrix.from_rows(
        [tuple(rng.randint(0, 1) for _ in range(14)) for _ in range(3)]
    )
    add("random 3x14, agent 2", M, 1)
    cols = [(0, 1, 1, 1, 1, 1, 1)] * 4 + [(0, 0, 1, 1, 1, 1, 1)] * 4 + [(0, 1, 0, 1, 1, 1, 1)] * 4
    add("structured 7x12, agent 1", PreferenceMatrix.from_columns(cols), 0)
    return cases


def time_one(fn, args, repeat):
    samples = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        result = fn(*args)
        samples.append(time.perf_counter() - t0)
    return min(samples), result


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeat", type=int, default=3, help="timing repetitions per case")
    opts = parser.parse_args()

    if _kernels is None:
        print("compiled kernel not built; only the pure backend is available")
    print(f"active backend: {kernels.ACTIVE_BACKEND}")
    print()
    header = f"{'case':<28} {'pure (s)':>10} {'compiled (s)':>13} {'speedup':>9}"
    print(header)
    print("-" * len(header))
    budget = 200_000_000
    for label, counts, masks, n, cap in workloads():
        t_py, r_py = time_one(
            _kernels_py.search_max_partition, (counts, masks, n, cap, budget), opts.repeat
        )
        if _kernels is not None:
            t_c, r_c = time_one(
                _kernels.search_max_partition, (counts, masks, n, cap, budget), opts.repeat
            )
            if r_py != r_c:
                raise AssertionError(f"backend mismatch on {label}: {r_py} vs {r_c}")
            print(f"{label:<28} {t_py:>10.4f} {t_c:>13.4f} {t_py / t_c:>8.1f}x")
        else:
            print(f"{label:<28} {t_py:>10.4f} {'-':>13} {'-':>9}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
