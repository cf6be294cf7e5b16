"""Compare the numba-compiled SESD kernel with the interpreted one.

Both run the identical search on the same random phase sub-problems, so
node counts and minimisers must agree; only wall time differs.

    python3 benchmarks/bench_sesd.py --sizes 8 12 16 20 --reps 5
"""

import argparse
import time

import numpy as np

from ris_sesd import _kernels
from ris_sesd.ils_core import QuadraticForm, build_alphabet, factorize, sesd_solve


def random_form(rng, N, rank):
    V = (rng.standard_normal((rank, N)) + 1j * rng.standard_normal((rank, N))) / np.sqrt(2)
    b = rng.standard_normal(N) + 1j * rng.standard_normal(N)
    return QuadraticForm(V.T @ V.conj(), 2 * b)


def best_time(func, reps):
    best = np.inf
    for _ in range(reps):
        t0 = time.perf_counter()
        out = func()
        best = min(best, time.perf_counter() - t0)
    return best, out


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--sizes", type=int, nargs="+", default=[8, 12, 16, 20])
    parser.add_argument("--q", type=int, default=1)
    parser.add_argument("--reps", type=int, default=3)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args(argv)

    if not _kernels.HAVE_NUMBA:
        print("numba unavailable or disabled: both columns run the interpreted kernel")
    al = build_alphabet(args.q)
    rng = np.random.default_rng(args.seed)
    # warm the JIT cache outside the timings
    sesd_solve(factorize(random_form(rng, 4, 4)), al)

    print(f"{'N':>4} {'nodes':>10} {'numba s':>10} {'python s':>10} {'speedup':>8}")
    for N in args.sizes:
        factor = factorize(random_form(rng, N, max(1, N // 2)), ordering="natural")
        t_fast, fast = best_time(lambda: sesd_solve(factor, al), args.reps)
        t_slow, slow = best_time(lambda: sesd_solve(factor, al, kernel=_kernels.sesd_search_py), 1)
        assert np.array_equal(fast.indices, slow.indices) and fast.stats == slow.stats
        print(f"{N:>4} {fast.stats.nodes:>10} {t_fast:>10.4f} {t_slow:>10.4f} {t_slow / t_fast:>8.1f}")


if __name__ == "__main__":
    main()
