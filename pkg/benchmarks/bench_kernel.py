"""Compare the compiled and pure-Python enumeration kernels.

Runs the same hashed enumeration calls through both kernels, checks that they
return identical models, and prints the median wall time per call.

    python3 benchmarks/bench_kernel.py --repeat 5
"""

import argparse
import os
import statistics
import sys
import time

import numpy as np

sys.path.insert(0, os.path.join(os.path.dirname(os.path.abspath(__file__)), "..", "tests"))

from formulas import circuit_formula, counted_formula  # noqa: E402
from unigen import engine  # noqa: E402
from unigen.engine import bsat_hashed  # noqa: E402
from unigen.hashing import sample_cell, sample_hash  # noqa: E402
from unigen.sampler import compute_kappa_pivot  # noqa: E402


def workloads(seed):
    """(name, formula, sampling set, hash, cell, bound) tuples."""
    rng = np.random.default_rng(seed)
    bound = compute_kappa_pivot(6.0).cell_bound
    out = []
    f, s = counted_formula(14, 2 ** 10, rng, extra=16)
    for i in range(5):
        h, a = sample_hash(rng, len(s), 4), sample_cell(rng, 4)
        out.append((f"cell 2^10/2^4 #{i}", f, s, h, a, bound))
    f, s = counted_formula(10, 256, rng, extra=12)
    out.append(("cell 256/2^1", f, s, sample_hash(rng, len(s), 1), sample_cell(rng, 1), 10 ** 6))
    f, s = circuit_formula(40, 2000, rng, asserted=3)
    h, a = sample_hash(rng, len(s), 31), sample_cell(rng, 31)
    out.append(("circuit 2000 gates, m=31", f, s, h, a, bound))
    return out


def time_call(job, kernel, repeat):
    _, f, s, h, a, bound = job
    times, res = [], None
    for _ in range(repeat):
        t = time.perf_counter()
        res = bsat_hashed(f, h, a, s, bound, None, kernel=kernel)
        times.append(time.perf_counter() - t)
    return statistics.median(times), res


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)
    if engine._compiled is None:
        ap.error("compiled kernel not built; run: python3 setup.py build_ext --inplace")

    print(f"{'workload':<28} {'models':>7} {'compiled ms':>12} {'python ms':>11} {'speedup':>8}")
    ratios = []
    for job in workloads(args.seed):
        tc, rc = time_call(job, "compiled", args.repeat)
        tp, rp = time_call(job, "python", args.repeat)
        if not np.array_equal(rc.models, rp.models):
            raise SystemExit(f"kernels disagree on {job[0]}")
        ratios.append(tp / tc)
        print(f"{job[0]:<28} {len(rc):>7} {tc * 1e3:>12.2f} {tp * 1e3:>11.2f} {tp / tc:>7.1f}x")
    print(f"geometric mean speedup: {statistics.geometric_mean(ratios):.1f}x")


if __name__ == "__main__":
    main()
