"""Time the batched Jacobi SVD on both backends against LAPACK.

Usage: python3 benchmarks/bench_kernels.py [--batch 20000] [--repeat 3]
"""

import argparse
import time

import numpy as np

from cancelling.kernels import available_backends

SHAPES = [(3, 3), (4, 3), (9, 3), (8, 6), (1, 3)]


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--batch", type=int, default=20000)
    parser.add_argument("--repeat", type=int, default=3)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    rng = np.random.default_rng(args.seed)
    backends = available_backends()
    header = f"{'shape':>8} " + " ".join(f"{name:>12}" for name in backends) + f" {'lapack':>12} {'max |ds|':>10}"
    print(f"batch = {args.batch}, best of {args.repeat} (seconds)")
    print(header)
    for m, n in SHAPES:
        a = rng.standard_normal((args.batch, m, n))
        ref_t, ref = best_of(lambda: np.linalg.svd(a, compute_uv=False), args.repeat)
        cells, err = [], 0.0
        for fn in backends.values():
            t, (u, s, v, ok) = best_of(lambda: fn(a), args.repeat)
            assert ok.all()
            err = max(err, float(np.abs(s[:, : min(m, n)] - ref).max()))
            cells.append(f"{t:12.4f}")
        print(f"{m}x{n:<6} " + " ".join(cells) + f" {ref_t:12.4f} {err:10.2e}")


if __name__ == "__main__":
    main()
