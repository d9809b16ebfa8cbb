"""Compare the compiled kernels with the numpy fallback.

    python benchmarks/bench_kernels.py [--repeat 5]

Reports best-of-N wall time per kernel and checks that both backends
return the same numbers.
"""
import argparse
import timeit

import numpy as np

from gmikit import _fallback
from gmikit.supernyq import omega0_matrix

try:
    from gmikit import _kernels
except ImportError:
    _kernels = None


def _cases():
    omega = np.ascontiguousarray(omega0_matrix(32).array)
    rng = np.random.default_rng(0)
    a = rng.standard_normal((24, 24))
    return {
        "jacobi omega0 L=32 (63x63)": (lambda mod: mod.jacobi_eigen(omega, 100, 1e-15)),
        "jacobi random 24x24": (lambda mod: mod.jacobi_eigen(np.ascontiguousarray(a + a.T), 100, 1e-15)),
        "uniform_stream 1e6": (lambda mod: mod.uniform_stream(0x1234ABCD, 0, 1_000_000)),
    }


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()
    if _kernels is None:
        print("compiled kernels not built; only the fallback can run")
    print(f"{'kernel':32s} {'python [s]':>12s} {'cython [s]':>12s} {'speedup':>9s}  agree")
    for name, fn in _cases().items():
        t_py = min(timeit.repeat(lambda: fn(_fallback), number=1, repeat=args.repeat))
        if _kernels is None:
            print(f"{name:32s} {t_py:12.4f} {'-':>12s} {'-':>9s}  -")
            continue
        t_cy = min(timeit.repeat(lambda: fn(_kernels), number=1, repeat=args.repeat))
        a, b = fn(_fallback), fn(_kernels)
        if isinstance(a, tuple):
            agree = np.allclose(np.sort(a[0]), np.sort(b[0]), rtol=0, atol=1e-12)
        else:
            agree = np.array_equal(a, b)
        print(f"{name:32s} {t_py:12.4f} {t_cy:12.4f} {t_py / t_cy:9.1f}  {agree}")


if __name__ == "__main__":
    main()
