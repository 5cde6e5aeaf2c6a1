"""Compiled kernels against the numpy fallback.

    python benchmarks/bench_kernels.py [--repeat 3] [--size 1.0]

Prints the best wall time of each backend, the speed-up and the largest
relative difference between the two results.
"""

import argparse
import time

import numpy as np

from levyk.kernels import _pykernels

try:
    from levyk.kernels import _ckernels
except ImportError:
    _ckernels = None


def _best(fn, repeat):
    best = float("inf")
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def cases(scale):
    rng = np.random.default_rng(7)
    n = int(4000 * scale)
    rho = np.geomspace(1e-3, 1e3, n)
    w = rng.uniform(0.1, 1.0, n)
    x = np.linspace(0.0, 20.0, n)
    s = np.concatenate([np.geomspace(1e-8, 1e-2, n // 4), np.linspace(1e-2, 2.0, n)])
    ws = rng.uniform(0.1, 1.0, s.size) / s
    a = np.exp(-np.linspace(-8.0, 8.0, 4 * n) ** 2)
    b = np.exp(-np.abs(np.linspace(-4.0, 4.0, 2 * n + 1)))
    drho = 0.05
    m = 8 * n
    return [
        ("cosine_sum", lambda k: k.cosine_sum(rho, w, x, 1)),
        ("versine_sum", lambda k: k.versine_sum(s, ws, drho * np.arange(m // 4), 1)),
        ("versine_grid", lambda k: k.versine_grid(s, ws, drho, m, 1)),
        ("direct_convolve", lambda k: k.direct_convolve(a, b, n, 3 * n, 1)),
    ]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--size", type=float, default=1.0, help="problem size multiplier")
    args = ap.parse_args()
    if _ckernels is None:
        print("compiled kernels not available; only the fallback can run")
    print(f"{'kernel':<16} {'numpy [s]':>10} {'cython [s]':>11} {'speed-up':>9} {'max rel diff':>13}")
    for name, call in cases(args.size):
        tp, ref = _best(lambda: call(_pykernels), args.repeat)
        if _ckernels is None:
            print(f"{name:<16} {tp:10.4f} {'-':>11} {'-':>9} {'-':>13}")
            continue
        tc, out = _best(lambda: call(_ckernels), args.repeat)
        diff = float(np.max(np.abs(out - ref) / np.maximum(np.abs(ref), 1e-300 + np.max(np.abs(ref)) * 1e-12)))
        print(f"{name:<16} {tp:10.4f} {tc:11.4f} {tp / tc:9.1f} {diff:13.2e}")


if __name__ == "__main__":
    main()
