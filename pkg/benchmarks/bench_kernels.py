"""Compare the compiled kernels with the pure-Python fallback.

Usage::

    python benchmarks/bench_kernels.py --n 1000000 --repeat 3

Times sequence sampling and sliding-window counting on the golden-mean
process for every available backend and checks that both backends return
identical results.
"""

import argparse
import time

import numpy as np

from qmemory import _backend
from qmemory.process import sample_sequence, zoo_machine
from qmemory.words import count_words


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        result = fn()
        times.append(time.perf_counter() - t0)
    return min(times), result


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    parser.add_argument("--n", type=int, default=1_000_000, help="sequence length")
    parser.add_argument("--ell", type=int, default=10, help="word length for counting")
    parser.add_argument("--repeat", type=int, default=3)
    parser.add_argument("--seed", type=int, default=12345)
    args = parser.parse_args(argv)

    machine = zoo_machine("golden-mean-3-2", p=0.9)
    results = {}
    print(f"{'backend':<10} {'sample [s]':>12} {'count [s]':>12} {'Msym/s':>10}")
    for name in _backend.available():
        t_sample, seq = best_of(lambda: sample_sequence(machine, args.n, args.seed, backend=name), args.repeat)
        t_count, dist = best_of(lambda: count_words(seq, args.ell, backend=name), args.repeat)
        results[name] = (t_sample, t_count, seq, dist)
        print(f"{name:<10} {t_sample:12.4f} {t_count:12.4f} {args.n / t_sample / 1e6:10.2f}")

    if len(results) == 2:
        (ts_c, tc_c, seq_c, d_c), (ts_p, tc_p, seq_p, d_p) = results["compiled"], results["python"]
        same = seq_c == seq_p and np.array_equal(d_c.counts, d_p.counts)
        print(f"speedup: sampling x{ts_p / ts_c:.1f}, counting x{tc_p / tc_c:.1f}")
        print(f"outputs identical: {same}")
    else:
        print("compiled extension not built; only the fallback was timed")


if __name__ == "__main__":
    main()
