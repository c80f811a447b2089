"""Compiled vs. pure-numpy RK4 linear-flow kernel.

    python3 benchmarks/bench_rk4.py [--steps 1000] [--repeat 5]
"""

import argparse
import timeit

import numpy as np

from corforge._core import rk4_flow_py

try:
    from corforge._core import _rk4
except ImportError:
    _rk4 = None


def problem(d, m, n, seed=0):
    rng = np.random.default_rng(seed)
    L = 0.1 * (rng.normal(size=(2 * n + 1, d, d)) + 1j * rng.normal(size=(2 * n + 1, d, d)))
    y0 = rng.normal(size=(d, m)) + 1j * rng.normal(size=(d, m))
    return L, y0


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--steps", type=int, default=1000)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    h = 1.0 / args.steps
    print(f"{'d':>4} {'m':>3} {'python [ms]':>12} {'cython [ms]':>12} {'speedup':>8} {'max diff':>10}")
    for d, m in ((2, 2), (8, 2), (16, 2), (32, 2), (64, 1)):
        L, y0 = problem(d, m, args.steps)
        t_py = min(timeit.repeat(lambda: rk4_flow_py.rk4_flow(L, None, y0, h), number=1, repeat=args.repeat))
        if _rk4 is None:
            print(f"{d:>4} {m:>3} {1e3 * t_py:>12.2f} {'n/a':>12}")
            continue
        t_c = min(timeit.repeat(lambda: _rk4.rk4_flow(L, None, y0, h), number=1, repeat=args.repeat))
        diff = np.abs(_rk4.rk4_flow(L, None, y0, h) - rk4_flow_py.rk4_flow(L, None, y0, h)).max()
        print(f"{d:>4} {m:>3} {1e3 * t_py:>12.2f} {1e3 * t_c:>12.2f} {t_py / t_c:>8.2f} {diff:>10.1e}")


if __name__ == "__main__":
    main()
