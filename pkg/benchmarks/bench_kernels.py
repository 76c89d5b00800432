"""Benchmark the compiled batch-gradient kernel against the numpy fallback.

Usage: python benchmarks/bench_kernels.py [--repeats 5]

Times one full-batch gradient call per configuration and prints the
per-call wall time of each backend plus the speedup.  Also verifies the
two backends agree to 1e-12 before timing.
"""

import argparse
import time

import numpy as np

from evcore import kernels
from evcore.head import ActivationKind
from evcore.losses import LossKind
from evcore.network import InitSpec, Nonlinearity, init
from evcore.rng import SplitMix64

CASES = [
    ("toy 4x4, N=4", [4, 4], 4),
    ("train batch 2-16-10, N=64", [2, 16, 10], 64),
    ("train batch 10-24-10, N=64", [10, 24, 10], 64),
    ("full pass 2-16-10, N=1000", [2, 16, 10], 1000),
    ("wide 20-64-32-10, N=2000", [20, 64, 32, 10], 2000),
]


def make_case(dims, n, seed=11):
    rng = SplitMix64(seed)
    net = init(dims, Nonlinearity.TANH, InitSpec.uniform(seed))
    x = np.array([[rng.uniform_in(-2, 2) for _ in range(dims[0])] for _ in range(n)])
    gt = np.array([rng.integer(dims[-1]) for _ in range(n)], dtype=np.int64)
    return net, x, gt


def run_backend(name, net, x, gt, repeats):
    kernels.use_backend(name)
    args = (net, x, gt, LossKind.LOG, ActivationKind.SELU, 1.0, True)
    result = kernels.batch_grad(*args)  # warmup
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        kernels.batch_grad(*args)
        best = min(best, time.perf_counter() - t0)
    return best, result


def check_agreement(rc, rp):
    worst = np.abs(rc[0] - rp[0]).max()
    for a, b in zip(rc[1] + rc[2], rp[1] + rp[2]):
        worst = max(worst, np.abs(a - b).max())
    worst = max(worst, np.abs(rc[3] - rp[3]).max())
    return worst


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeats", type=int, default=5)
    args = ap.parse_args()

    try:
        kernels.use_backend("compiled")
    except Exception:
        print("compiled backend unavailable; nothing to compare")
        return

    print(f"{'case':28s} {'python':>10s} {'compiled':>10s} {'speedup':>8s} {'max|diff|':>10s}")
    for label, dims, n in CASES:
        net, x, gt = make_case(dims, n)
        t_c, rc = run_backend("compiled", net, x, gt, args.repeats)
        t_p, rp = run_backend("python", net, x, gt, args.repeats)
        diff = check_agreement(rc, rp)
        print(f"{label:28s} {t_p * 1e3:8.2f}ms {t_c * 1e3:8.2f}ms {t_p / t_c:7.1f}x {diff:10.2e}")
    kernels.use_backend("auto")


if __name__ == "__main__":
    main()
