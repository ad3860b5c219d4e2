"""Compare the compiled and pure-Python kernels.

Usage: python benchmarks/bench_kernels.py [--repeat N]
"""

import argparse
import importlib
import timeit

import numpy as np

from mitest import _kernels_py


def cases(rng):
    scales = np.linspace(0.2, 8.0, 16)
    alphas = np.full(scales.size, 0.5)
    ratios = 1 - scales.min() / scales
    log_c = float(np.sum(alphas * np.log(scales.min() / scales)))
    counts = rng.integers(1, 50, size=(20, 20)).astype(np.int64)
    x = rng.integers(0, 20, size=100_000).astype(np.int64)
    y = rng.integers(0, 20, size=100_000).astype(np.int64)
    return {
        "gamma_series_weights (16 spread groups)":
            lambda k: k.gamma_series_weights(alphas, ratios, log_c, 1e-12, 100_000),
        "g2_counts (20x20)": lambda k: k.g2_counts(counts),
        "pearson_counts (20x20)": lambda k: k.pearson_counts(counts),
        "crosstab_codes (1e5 pairs)": lambda k: k.crosstab_codes(x, y, 20, 20),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    try:
        compiled = importlib.import_module("mitest._kernels")
    except ImportError:
        compiled = None
        print("compiled extension not built; timing the Python fallback only")
    rng = np.random.default_rng(0)
    print(f"{'kernel':42s} {'python ms':>11s} {'compiled ms':>12s} {'speedup':>8s}")
    for name, fn in cases(rng).items():
        number = 3
        t_py = min(timeit.repeat(lambda: fn(_kernels_py), number=number, repeat=args.repeat)) / number
        if compiled is None:
            print(f"{name:42s} {t_py * 1e3:11.3f} {'-':>12s} {'-':>8s}")
            continue
        t_c = min(timeit.repeat(lambda: fn(compiled), number=number, repeat=args.repeat)) / number
        print(f"{name:42s} {t_py * 1e3:11.3f} {t_c * 1e3:12.3f} {t_py / t_c:7.1f}x")


if __name__ == "__main__":
    main()
