#!/usr/bin/env python3
"""Sweep sketch accuracy against the dense oracle.

For each requested epsilon this builds a sketch of one random regular
graph, queries a random sample of vertex pairs, and compares against
exact effective resistances.  Reports worst/mean relative error, sketch
size per vertex, and build time, so the accuracy/space trade-off is
visible at a glance.

Example::

    python3 scripts/sketch_accuracy.py --n 300 --d 8 --epsilons 0.5 0.25 --pairs 200
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from rsketch import (
    GraphGeneratorSpec,
    build_sketch,
    compute_params,
    estimate_spectral_gap,
    exact_effective_resistance_matrix,
    generate,
    query_batch,
)


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=300)
    ap.add_argument("--d", type=int, default=8)
    ap.add_argument("--epsilons", type=float, nargs="+", default=[0.5, 0.35, 0.25])
    ap.add_argument("--pairs", type=int, default=200)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args()

    g = generate(GraphGeneratorSpec(kind="random-regular", n=args.n, d=args.d),
                 seed=args.seed)
    nu2 = estimate_spectral_gap(g, seed=args.seed)
    print(f"graph: {args.d}-regular n={g.n} m={g.m}, estimated gap {nu2:.4f}")

    t = time.perf_counter()
    r_exact = exact_effective_resistance_matrix(g)
    print(f"dense oracle: {time.perf_counter() - t:.1f}s")

    rng = np.random.default_rng(args.seed + 1)
    pairs = np.empty((args.pairs, 2), dtype=np.int64)
    for i in range(args.pairs):
        u, v = rng.choice(g.n, size=2, replace=False)
        pairs[i] = (u, v)
    truth = r_exact[pairs[:, 0], pairs[:, 1]]

    print(f"{'eps':>6} {'t0':>5} {'s':>8} {'entries/v':>10} "
          f"{'build_s':>8} {'max_rel':>8} {'mean_rel':>8}")
    for eps in args.epsilons:
        params = compute_params(g.n, g.weight_ratio(), eps, nu2)
        t = time.perf_counter()
        sk = build_sketch(g, params, seed=args.seed, workers=args.workers)
        build_s = time.perf_counter() - t
        est = query_batch(sk, pairs)
        rel = np.abs(est - truth) / truth
        print(f"{eps:>6.3f} {params.t0:>5} {params.s:>8} "
              f"{sk.entry_count() / g.n:>10.1f} {build_s:>8.1f} "
              f"{rel.max():>8.4f} {rel.mean():>8.4f}")


if __name__ == "__main__":
    main()
