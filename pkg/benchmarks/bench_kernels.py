"""Timing comparison of the fading-kernel backends.

Runs the element-level tail sampler through the compiled extension (when
built) and the pure-numpy fallback on identical streams, checks that the
tail counts agree bit-for-bit, and prints draws/second for each.

Usage: python benchmarks/bench_kernels.py [--draws 20000] [--elements 2000]
"""

import argparse
import time

import numpy as np

from irsplan._kernels import BACKEND, numpy_backend

try:
    from irsplan._kernels import _fading
except ImportError:
    _fading = None


def _stream(seed):
    return np.random.Philox(key=np.array([seed, 0], dtype=np.uint64))


def run(fn, seed, n_draws, n_elems, gains):
    g_i, g_r, g_d = gains
    start = time.perf_counter()
    count, s2, s4 = fn(_stream(seed), n_draws, n_elems, g_i, g_r, g_d,
                       1.2 * n_elems ** 2 * np.sqrt(g_i * g_r) ** 2)
    elapsed = time.perf_counter() - start
    return count, s2, s4, elapsed


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--draws", type=int, default=20_000)
    ap.add_argument("--elements", type=int, default=2_000)
    ap.add_argument("--seed", type=int, default=7)
    args = ap.parse_args()

    gains = (2.1e-9, 4.4e-10, 6.0e-13)
    print(f"selected backend at import: {BACKEND}")
    print(f"workload: {args.draws} draws x {args.elements} elements "
          f"({args.draws * (2 * args.elements + 1):.3g} exponentials)")

    c_np, s2_np, s4_np, t_np = run(numpy_backend.exact_tail_stats, args.seed,
                                   args.draws, args.elements, gains)
    rate = args.draws / t_np
    print(f"numpy fallback : {t_np:8.3f} s  ({rate:10.0f} draws/s)")

    if _fading is None:
        print("compiled       : not built (install re-runs the build; "
              "set IRSPLAN_NO_EXTENSION=1 to skip deliberately)")
        return
    c_c, s2_c, s4_c, t_c = run(_fading.exact_tail_stats, args.seed,
                               args.draws, args.elements, gains)
    rate_c = args.draws / t_c
    print(f"compiled       : {t_c:8.3f} s  ({rate_c:10.0f} draws/s)  "
          f"speedup x{t_np / t_c:.2f}")
    assert c_c == c_np, f"tail counts diverge: {c_c} vs {c_np}"
    for a, b, name in ((s2_c, s2_np, "sum Z^2"), (s4_c, s4_np, "sum Z^4")):
        rel = abs(a - b) / abs(b)
        assert rel < 1e-10, f"{name} diverges: rel {rel:.2e}"
    print("cross-check    : tail counts identical, moment sums within 1e-10")


if __name__ == "__main__":
    main()
