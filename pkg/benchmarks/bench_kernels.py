"""Time the compiled kernels against the NumPy/Python fallback.

    python benchmarks/bench_kernels.py [--repeat 5]

Reports the best-of-``repeat`` wall time per case and checks both backends
return identical numbers.
"""

import argparse
import time

import numpy as np

from airis import _fallback

try:
    from airis import _core
except ImportError:  # extension not built
    _core = None


def best_time(fn, repeat):
    times = []
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def cases(rng):
    # rows ~ CDF grid points, columns ~ I psi Taylor orders
    for rows, order in ((2000, 16), (2000, 64), (20000, 64), (2000, 256)):
        c = np.ascontiguousarray(rng.random((rows, order + 1)) / np.arange(1, order + 2))
        yield f"exp_series_coeffs rows={rows} order={order}", "exp_series_coeffs", (c,)
    for steps in (10**5, 10**6):
        u = rng.random(steps)
        yield f"markov_trace steps={steps}", "markov_trace", (0.1, 0.3, u, 0)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    if _core is None:
        print("compiled extension not available; only the fallback can run")
    rng = np.random.default_rng(20240601)
    print(f"{'case':44s} {'python [ms]':>12s} {'cython [ms]':>12s} {'speedup':>8s}")
    for label, name, fn_args in cases(rng):
        t_py, ref = best_time(lambda: getattr(_fallback, name)(*fn_args), args.repeat)
        if _core is None:
            print(f"{label:44s} {1e3 * t_py:12.2f} {'-':>12s} {'-':>8s}")
            continue
        t_cy, out = best_time(lambda: getattr(_core, name)(*fn_args), args.repeat)
        if not np.allclose(np.asarray(out, dtype=float), np.asarray(ref, dtype=float), rtol=1e-12, atol=0):
            raise SystemExit(f"{label}: backends disagree")
        print(f"{label:44s} {1e3 * t_py:12.2f} {1e3 * t_cy:12.2f} {t_py / t_cy:8.1f}")


if __name__ == "__main__":
    main()
