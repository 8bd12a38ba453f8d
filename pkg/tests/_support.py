"""Shared test helpers: random instance generators kept deliberately simple."""

from __future__ import annotations

import numpy as np

from rsketch import DDMatrix, WeightedGraph, build_graph, is_connected


def random_connected_graph(rng: np.random.Generator, n_min: int = 4,
                           n_max: int = 30, w_low: float = 1.0,
                           w_high: float = 10.0) -> WeightedGraph:
    """Connected Erdős–Rényi-style graph with uniform random weights."""
    n = int(rng.integers(n_min, n_max + 1))
    p = max(0.2, 2.0 * np.log(n) / n)
    for _ in range(200):
        mask = np.triu(rng.random((n, n)) < p, 1)
        iu, iv = np.nonzero(mask)
        if len(iu) < n - 1:
            continue
        w = rng.uniform(w_low, w_high, size=len(iu))
        g = build_graph(np.column_stack([iu, iv, w]), n=n)
        if is_connected(g):
            return g
    raise RuntimeError("failed to draw a connected graph")


def random_dd_matrix(rng: np.random.Generator, n: int, alpha: float,
                     p: float = 0.25, margin: float = 0.0) -> DDMatrix:
    """Random (1+alpha)-DD matrix with a connected off-diagonal graph.

    ``margin=0`` puts every row exactly at the dominance boundary — the
    hardest case for floor-type properties.
    """
    for _ in range(200):
        a = np.triu(rng.random((n, n)) < p, 1) * rng.uniform(0.5, 2.0, (n, n))
        a = a + a.T
        deg = a.sum(axis=1)
        if not np.all(deg > 0):
            continue
        if not is_connected(build_graph(
                np.column_stack([*np.nonzero(np.triu(a, 1)),
                                 a[np.nonzero(np.triu(a, 1))]]), n=n)):
            continue
        diag = (1.0 + alpha) * deg * (1.0 + margin * rng.random(n))
        return DDMatrix.from_dense(np.diag(diag) - a)
    raise RuntimeError("failed to draw a connected DD instance")


def path_graph(n: int, w: float = 1.0) -> WeightedGraph:
    return build_graph([(i, i + 1, w) for i in range(n - 1)], n=n)


def cycle_graph(n: int, w: float = 1.0) -> WeightedGraph:
    return build_graph([(i, (i + 1) % n, w) for i in range(n)], n=n)


def complete_graph(n: int, w: float = 1.0) -> WeightedGraph:
    return build_graph([(i, j, w) for i in range(n) for j in range(i + 1, n)], n=n)
