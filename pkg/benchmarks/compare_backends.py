"""Time the compiled annealing kernel against the pure-Python fallback.

    python benchmarks/compare_backends.py --sizes 8,16,32 --reads 20 --sweeps 200

Both kernels run the same program with the same seed; the script checks that
their samples agree before reporting times.
"""

import argparse
import time

import numpy as np

from benders_qubo import sampler
from benders_qubo.qubo import BitLayout, QuboProgram
from benders_qubo.sampler import SaConfig, sample


def random_program(n, seed):
    rng = np.random.default_rng(seed)
    Q = np.triu(rng.uniform(-1.0, 1.0, size=(n, n)))
    return QuboProgram(Q, 0.0, BitLayout(n, m_frac=0, m_pos=-1, m_neg=-1))


def best_time(fn, repeats):
    times = []
    for _ in range(repeats):
        start = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - start)
    return min(times), out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", default="8,16,32,64")
    ap.add_argument("--reads", type=int, default=20)
    ap.add_argument("--sweeps", type=int, default=200)
    ap.add_argument("--repeats", type=int, default=3)
    args = ap.parse_args()

    if sampler.KERNEL != "compiled":
        raise SystemExit("compiled kernel not built; run `pip install -e . --no-build-isolation` first")
    cfg = SaConfig(num_reads=args.reads, num_sweeps=args.sweeps, seed=1)
    print(f"{'bits':>5} {'compiled_s':>11} {'python_s':>9} {'speedup':>8} {'ns/flip':>8}")
    for n in (int(s) for s in args.sizes.split(",")):
        q = random_program(n, n)
        fast_t, fast = best_time(lambda: sample(q, cfg, kernel="compiled"), args.repeats)
        slow_t, slow = best_time(lambda: sample(q, cfg, kernel="python"), 1)
        if not np.array_equal(fast.states, slow.states):
            raise SystemExit(f"kernels disagree at {n} bits")
        flips = args.reads * args.sweeps * n
        print(f"{n:>5} {fast_t:>11.4f} {slow_t:>9.3f} {slow_t / fast_t:>8.0f} {1e9 * fast_t / flips:>8.1f}")


if __name__ == "__main__":
    main()
