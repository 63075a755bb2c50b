"""Time the numba and numpy twins of every hot kernel on the same inputs.

Run with ``python3 benchmarks/bench_kernels.py [--repeat N]``. Each kernel is
called once to trigger compilation before timing; results of both paths are
compared so a speedup never hides a wrong answer.
"""

import argparse
import time

import numpy as np

from sparse_dyadic import kernels
from sparse_dyadic.cz_operator import KernelSpec, offset_table
from sparse_dyadic.sampled_field import GridSpec


def best_of(fn, repeat):
    fn()  # warm up / compile
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def cases(rng):
    pts = rng.normal(size=(2048, 3))
    yield "kth_distances 2048x3", lambda m: getattr(kernels, f"kth_distances_{m}")(pts, pts[:256], 2.0, 1500)

    g = GridSpec.unit(1, 12)
    spec = KernelSpec.hilbert()
    table = offset_table(spec, g)[0][0]
    multi = g.multi_index
    f = rng.normal(size=(g.ncell, 1))
    yield f"convolve N={g.ncell}", lambda m: getattr(kernels, f"convolve_{m}")(table, multi, g.n_axis, f)

    w = np.exp(rng.normal(size=1024))
    s = 1 / w
    yield "interval_ap N=1024", lambda m: getattr(kernels, f"interval_ap_{m}")(w, s, 2.0)
    yield "interval_maximal N=1024", lambda m: getattr(kernels, f"interval_maximal_{m}")(w)
    small = w[:256]
    yield "interval_ainf N=256", lambda m: getattr(kernels, f"interval_ainf_{m}")(small)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    rng = np.random.Generator(np.random.PCG64(args.seed))
    print(f"{'kernel':28s} {'numpy s':>10s} {'numba s':>10s} {'speedup':>8s}  agree")
    for name, call in cases(rng):
        a, b = call("np"), call("nb")
        pairs = zip(a, b) if isinstance(a, tuple) else [(a, b)]
        agree = all(np.allclose(x, y, rtol=1e-10, atol=1e-12) for x, y in pairs)
        t_np = best_of(lambda: call("np"), args.repeat)
        t_nb = best_of(lambda: call("nb"), args.repeat)
        print(f"{name:28s} {t_np:10.4f} {t_nb:10.4f} {t_np / t_nb:8.1f}  {agree}")


if __name__ == "__main__":
    main()
