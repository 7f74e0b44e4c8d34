"""Compiled vs pure-Python kernels.

    python3 benchmarks/bench_kernels.py [--repeat 3]

Times ``jacobi_eigh`` on random symmetric matrices and ``monodromy_batch`` on
a smooth coefficient field, for each available backend, and prints the
best-of-``repeat`` wall time with the speedup of the compiled module.
"""

import argparse
import timeit

import numpy as np

from rsl.kernels import _pykernels

try:
    from rsl.kernels import _ckernels
except ImportError:
    _ckernels = None


def jacobi_case(n):
    a = np.random.default_rng(0).normal(size=(n, n))
    a = a + a.T
    return lambda k: k.jacobi_eigh(a)


def monodromy_case(m, k):
    t = np.arange(m) / m
    s = np.zeros((m, 2, 2))
    s[:, 0, 0] = 1.0 + 0.3 * np.cos(2 * np.pi * t)
    s[:, 1, 1] = 0.5 * np.sin(4 * np.pi * t)
    s[:, 0, 1] = s[:, 1, 0] = 0.2 * np.cos(6 * np.pi * t)
    mus = np.linspace(-50.0, 50.0, k)
    return lambda mod: mod.monodromy_batch(s, mus)


CASES = [
    ("jacobi_eigh n=32", jacobi_case(32)),
    ("jacobi_eigh n=64", jacobi_case(64)),
    ("jacobi_eigh n=128", jacobi_case(128)),
    ("monodromy_batch M=1024 K=64", monodromy_case(1024, 64)),
    ("monodromy_batch M=4096 K=256", monodromy_case(4096, 256)),
]


def best(fn, mod, repeat):
    return min(timeit.repeat(lambda: fn(mod), number=1, repeat=repeat))


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    print(f"{'case':32s} {'python [s]':>12s} {'cython [s]':>12s} {'speedup':>9s}")
    for name, fn in CASES:
        tp = best(fn, _pykernels, args.repeat)
        if _ckernels is None:
            print(f"{name:32s} {tp:12.4f} {'n/a':>12s} {'n/a':>9s}")
            continue
        tc = best(fn, _ckernels, args.repeat)
        print(f"{name:32s} {tp:12.4f} {tc:12.4f} {tp / tc:9.1f}")


if __name__ == "__main__":
    main()
