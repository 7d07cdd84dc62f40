"""Time the compiled core against the numpy fallback.

    python3 benchmarks/bench_backends.py [--sizes 200 500 1000] [--bands 103]
"""

import argparse
import timeit

import numpy as np

from crrbf import _pycore

try:
    from crrbf import _ccore
except ImportError:
    _ccore = None


def best_of(fn, repeat=3):
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def problem(n, d, seed=0):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, d))
    y = np.where(X[:, 0] + 0.5 * rng.normal(size=n) > 0, 1.0, -1.0)
    w = np.full(d, 1.0 / d)
    return X, y, w


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--sizes", type=int, nargs="+", default=[200, 500, 1000])
    parser.add_argument("--bands", type=int, default=103)
    parser.add_argument("--trade-off", type=float, default=100.0)
    args = parser.parse_args(argv)
    if _ccore is None:
        print("compiled core not built; only the fallback is available")

    print(f"{'n':>6} {'stage':>6} {'python s':>10} {'cython s':>10} {'speedup':>8}")
    for n in args.sizes:
        X, y, w = problem(n, args.bands)
        K = _pycore.weighted_rbf_gram_sym(X, w)
        stages = {
            "gram": (lambda m: (lambda: m.weighted_rbf_gram_sym(X, w))),
            "smo": (lambda m: (lambda: m.smo_solve(K, y, args.trade_off, 1e-3, 100_000, 10, 0))),
        }
        for stage, make in stages.items():
            py = best_of(make(_pycore))
            cy = best_of(make(_ccore)) if _ccore is not None else float("nan")
            print(f"{n:>6} {stage:>6} {py:>10.4f} {cy:>10.4f} {py / cy:>8.1f}")


if __name__ == "__main__":
    main()
