"""Benchmark the NumPy and compiled scan kernels against each other.

Times ``quad_forms`` (the pricing scan) and ``fused_scan`` (the rank-one
update of all cached quadratic forms) over a grid of problem sizes and
prints one table row per case with the speedup of the compiled kernel.

Usage::

    python3 benchmarks/bench_kernels.py [--repeats 5] [--sizes n:m ...]
"""

import argparse
import time

import numpy as np

from optdesign._kernels import _pure

try:
    from optdesign._kernels import _cyk
except ImportError:
    _cyk = None

DEFAULT_SIZES = ["5:10000", "5:100000", "10:100000", "10:1000000", "20:100000"]


def _best_of(fn, repeats):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench_case(n, m, repeats, rng):
    X = np.asfortranarray(rng.standard_normal((n, m)))
    A = rng.standard_normal((n, n))
    H = A @ A.T + np.eye(n)
    h = rng.standard_normal(n)
    kappa = _pure.quad_forms(X, H)
    out = np.empty(m)

    rows = []
    t_pure = _best_of(lambda: _pure.quad_forms(X, H, out=out), repeats)
    t_cyk = (
        _best_of(lambda: _cyk.quad_forms(X, H, out=out), repeats)
        if _cyk is not None
        else None
    )
    rows.append(("quad_forms", t_pure, t_cyk))

    buf = np.empty(m)

    def run_pure():
        buf[:] = kappa
        _pure.fused_scan(X, h, buf, 1.001, -0.001)

    t_pure = _best_of(run_pure, repeats)
    if _cyk is not None:

        def run_cyk():
            buf[:] = kappa
            _cyk.fused_scan(X, h, buf, 1.001, -0.001)

        t_cyk = _best_of(run_cyk, repeats)
    else:
        t_cyk = None
    rows.append(("fused_scan", t_pure, t_cyk))
    return rows


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeats", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument(
        "--sizes",
        nargs="+",
        default=DEFAULT_SIZES,
        metavar="N:M",
        help="problem sizes as dimension:points",
    )
    args = ap.parse_args()
    rng = np.random.default_rng(args.seed)

    if _cyk is None:
        print("compiled kernels unavailable; timing the NumPy fallback only")
    header = f"{'kernel':<12} {'n':>4} {'m':>9} {'numpy':>10} {'cython':>10} {'speedup':>8}"
    print(header)
    print("-" * len(header))
    for size in args.sizes:
        n, m = (int(v) for v in size.split(":"))
        for name, t_pure, t_cyk in bench_case(n, m, args.repeats, rng):
            if t_cyk is None:
                print(f"{name:<12} {n:>4} {m:>9} {t_pure * 1e3:>8.2f}ms {'-':>10} {'-':>8}")
            else:
                print(
                    f"{name:<12} {n:>4} {m:>9} {t_pure * 1e3:>8.2f}ms "
                    f"{t_cyk * 1e3:>8.2f}ms {t_pure / t_cyk:>7.2f}x"
                )


if __name__ == "__main__":
    main()
