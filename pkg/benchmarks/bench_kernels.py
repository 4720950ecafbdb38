"""
Compiled kernels against the numpy fallback.

    python benchmarks/bench_kernels.py [--n 64] [--crps 2000] [--repeat 3]

Times SMO on a noisy random CRP set, the greedy challenge construction, and checks that both
backends return identical results.
"""
import argparse
import time

import numpy as np

from apuflab import _fallback
from apuflab.challenges import random_challenges
from apuflab.learner import _pack
from apuflab.puf import evaluate, sample_puf

try:
    from apuflab import _kernels
except ImportError:  # extension not built
    _kernels = None


def best_of(fn, repeat):
    times, out = [], None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def bench_smo(impl, packed, d, y, repeat):
    def run():
        alpha, G = np.zeros(len(y)), -np.ones(len(y))
        it = impl.smo_binary(packed, d, y, 1.0, 1e-3, 10_000_000, alpha, G)
        return it, alpha

    return best_of(run, repeat)


def bench_greedy(impl, w, orders, targets, repeat):
    def run():
        return np.array([impl.greedy_challenge(w, o, t) for o, t in zip(orders, targets)])

    return best_of(run, repeat)


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--n", type=int, default=64)
    p.add_argument("--crps", type=int, default=2000)
    p.add_argument("--constructions", type=int, default=5000)
    p.add_argument("--repeat", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args(argv)
    if _kernels is None:
        raise SystemExit("compiled extension not built; run `pip install -e . --no-build-isolation` first")

    rng = np.random.default_rng(args.seed)
    puf = sample_puf(args.n, rng=rng)
    X = random_challenges(args.n, args.crps, rng)
    y = evaluate(puf, X).astype(np.float64)
    y = np.where(rng.random(args.crps) < 0.05, -y, y)
    packed = _pack(X)
    w = rng.normal(size=args.n + 1)
    orders = [rng.permutation(args.n) for _ in range(args.constructions)]
    targets = rng.normal(size=args.constructions)

    print(f"n={args.n}, {args.crps} CRPs (5% label noise), {args.constructions} constructions, "
          f"best of {args.repeat}")
    print(f"{'kernel':<10} {'compiled s':>11} {'fallback s':>11} {'speed-up':>9}  identical")
    tc, (itc, ac) = bench_smo(_kernels, packed, X.shape[1], y, args.repeat)
    tf, (itf, af) = bench_smo(_fallback, packed, X.shape[1], y, args.repeat)
    print(f"{'smo':<10} {tc:>11.4f} {tf:>11.4f} {tf / tc:>8.1f}x  {itc == itf and np.array_equal(ac, af)}"
          f"  ({itc} iterations)")
    tc, gc = bench_greedy(_kernels, w, orders, targets, args.repeat)
    tf, gf = bench_greedy(_fallback, w, orders, targets, args.repeat)
    print(f"{'greedy':<10} {tc:>11.4f} {tf:>11.4f} {tf / tc:>8.1f}x  {np.array_equal(gc, gf)}")


if __name__ == "__main__":
    main()
