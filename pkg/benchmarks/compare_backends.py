"""Time the compiled kernels against the pure-Python fallback.

Both implementations are imported directly (bypassing the backend selector)
and exercised on problem sizes typical of an annealing run: a couple of
hundred samples, two inputs, two outputs, and a handful of centres.  Run

    python benchmarks/compare_backends.py [--repeats N]

from the repository root after installing the package.
"""

import argparse
import time

import numpy as np

from rbfanneal import _pykernels

try:
    from rbfanneal import _fastkernels
except ImportError:
    _fastkernels = None

CUBIC = 1


def _problem(n, k, rng):
    x = rng.uniform(-2.0, 2.0, (n, 2))
    centres = rng.uniform(-2.0, 2.0, (k, 2))
    y = rng.standard_normal((n, 2))
    return x, centres, y


def _time(fn, repeats):
    best = float("inf")
    for _ in range(repeats):
        began = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - began)
    return best


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeats", type=int, default=200,
                        help="timing repetitions per case (best is kept)")
    parser.add_argument("--n", type=int, default=200, help="sample count")
    args = parser.parse_args()

    if _fastkernels is None:
        print("compiled kernels are not available; build the extension first")
        return 1

    rng = np.random.default_rng(0)
    header = f"{'case':<26}{'python':>12}{'compiled':>12}{'speedup':>10}"
    print(header)
    print("-" * len(header))
    for k in (5, 15, 30):
        x, centres, y = _problem(args.n, k, rng)
        cases = {
            f"design n={args.n} k={k}": (
                lambda m=_pykernels: m.build_design(x, centres, CUBIC, 0.0),
                lambda m=_fastkernels: m.build_design(x, centres, CUBIC, 0.0),
            ),
        }
        design = _pykernels.build_design(x, centres, CUBIC, 0.0)
        cases[f"lstsq  n={args.n} m={design.shape[1]}"] = (
            lambda m=_pykernels: m.least_squares(design, y, 1e-10, True),
            lambda m=_fastkernels: m.least_squares(design, y, 1e-10, True),
        )
        for name, (py_fn, fast_fn) in cases.items():
            t_py = _time(py_fn, args.repeats)
            t_fast = _time(fast_fn, args.repeats)
            print(f"{name:<26}{t_py * 1e6:>10.1f}us{t_fast * 1e6:>10.1f}us"
                  f"{t_py / t_fast:>9.2f}x")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
