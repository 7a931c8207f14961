"""Compare the compiled and pure-Python vote kernels.

Usage: python benchmarks/bench_kernels.py [--rows N] [--judges K] [--repeat R]
"""

from __future__ import annotations

import argparse
import timeit

import numpy as np

from judgepanel import kernels

PROJECTION = [1, 1, 2, 2]


def synthetic_grid(rows: int, judges: int, seed: int = 0):
    rng = np.random.default_rng(seed)
    severities = rng.integers(-1, 4, size=(rows, judges)).astype(np.int8)
    votes = np.where(severities < 0, 0, np.where(severities <= 1, 1, 2)).astype(np.int8)
    return votes, severities


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--rows", type=int, default=100_000)
    parser.add_argument("--judges", type=int, default=15)
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args()

    votes, severities = synthetic_grid(args.rows, args.judges)
    values = np.random.default_rng(1).random(args.rows)
    impls = {"python": kernels.python_impl}
    if kernels.compiled_impl is not None:
        impls["cython"] = kernels.compiled_impl
    else:
        print("compiled extension not built; timing the Python kernels only")

    print(f"{args.rows} rows x {args.judges} judges, best of {args.repeat}")
    timings: dict[str, dict[str, float]] = {}
    for name, impl in impls.items():
        timings[name] = {
            "vote_rows": min(timeit.repeat(
                lambda: kernels.vote_rows(votes, severities, 0.6, PROJECTION, impl=impl),
                number=1, repeat=args.repeat)),
            "bin_counts": min(timeit.repeat(
                lambda: kernels.bin_counts(values, 20, impl=impl), number=1, repeat=args.repeat)),
        }
    for kernel in ("vote_rows", "bin_counts"):
        line = "  ".join(f"{name} {t[kernel] * 1000:9.2f} ms" for name, t in timings.items())
        if "cython" in timings:
            line += f"  speedup {timings['python'][kernel] / timings['cython'][kernel]:.1f}x"
        print(f"{kernel:>10}: {line}")

    if "cython" in impls:
        py = kernels.vote_rows(votes, severities, 0.6, PROJECTION, impl=impls["python"])
        cy = kernels.vote_rows(votes, severities, 0.6, PROJECTION, impl=impls["cython"])
        same = all(np.array_equal(a, b, equal_nan=True) for a, b in zip(py, cy))
        print(f"outputs identical: {same}")


if __name__ == "__main__":
    main()
