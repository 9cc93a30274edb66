#!/usr/bin/env python3
"""Times the coordinate-sweep ratio kernel: compiled extension vs numpy twin.

Both backends run the identical workload (fixed sweep count, early-exit
tolerance disabled) on the same synthetic weighted ratio problems, so the
table isolates raw kernel speed.  The last column confirms the two
implementations land on the same local optimum.

Usage, from an environment with the package installed:
    python3 benchmarks/bench_kernels.py [--repeats 5] [--sweeps 50]
"""

import argparse
import time

import numpy as np

from marcz import kernels


def problem(rows, dim, seed):
    rng = np.random.default_rng(seed)
    A, _ = np.linalg.qr(rng.standard_normal((rows, dim)))
    counts = rng.multinomial(rows // 2, np.full(rows, 1.0 / rows))
    w_num = counts / counts.sum()
    w_den = np.full(rows, 1.0 / rows)
    c0 = rng.standard_normal(dim)
    c0 /= np.linalg.norm(c0)
    return A, w_num, w_den, c0


def time_impl(impl, A, w_num, w_den, p, c0, sweeps, repeats):
    best = float("inf")
    val = None
    for _ in range(repeats):
        t0 = time.perf_counter()
        val, _ = kernels.refine_ratio(A, w_num, w_den, p, c0, maximize=True,
                                      max_iter=sweeps, rel_tol=0.0, impl=impl)
        best = min(best, time.perf_counter() - t0)
    return best, val


def main():
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("--repeats", type=int, default=5,
                    help="timing repetitions per cell (best is kept)")
    ap.add_argument("--sweeps", type=int, default=50,
                    help="coordinate sweeps per refine call")
    args = ap.parse_args()

    compiled = kernels.get_backend("compiled")
    fallback = kernels.get_backend("numpy")
    if compiled is None:
        print("compiled extension not built; timing the numpy twin only")

    print(f"{'rows':>6} {'dim':>4} {'p':>4} {'numpy ms':>10} "
          f"{'compiled ms':>12} {'speedup':>8} {'rel gap':>10}")
    for rows, dim in ((512, 5), (2048, 9), (8192, 17)):
        A, w_num, w_den, c0 = problem(rows, dim, seed=rows + dim)
        for p in (1.0, 1.5):
            t_np, v_np = time_impl(fallback, A, w_num, w_den, p, c0,
                                   args.sweeps, args.repeats)
            if compiled is None:
                print(f"{rows:>6} {dim:>4} {p:>4g} {t_np * 1e3:>10.2f} "
                      f"{'-':>12} {'-':>8} {'-':>10}")
                continue
            t_c, v_c = time_impl(compiled, A, w_num, w_den, p, c0,
                                 args.sweeps, args.repeats)
            gap = abs(v_c - v_np) / max(abs(v_np), 1e-300)
            print(f"{rows:>6} {dim:>4} {p:>4g} {t_np * 1e3:>10.2f} "
                  f"{t_c * 1e3:>12.2f} {t_np / t_c:>7.1f}x {gap:>10.1e}")


if __name__ == "__main__":
    main()
