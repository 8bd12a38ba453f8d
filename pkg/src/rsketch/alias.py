"""Constant-time weighted neighbour sampling (Walker alias tables).

For every vertex we precompute, over its CSR arc slice, the classic
two-array alias table: ``prob[slot]`` and ``alias[slot]`` (slot-local
indices).  Sampling is then two RNG draws: a uniform slot and a coin
against ``prob``.  Construction is linear in the number of arcs.

The same table construction is exposed for arbitrary weight vectors
(:func:`build_alias_table`); the dense clique distributions of implicit
Schur walks reuse it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .graphs import WeightedGraph

__all__ = [
    "AliasSampler",
    "build_alias",
    "build_alias_table",
    "sample_neighbor",
    "sample_neighbor_batch",
]


def _walker_tables(weights: np.ndarray) -> tuple[np.ndarray, np.ndarray, int]:
    """Two-stack Walker construction for one distribution.

    Returns ``(prob, alias, ops)`` where ``ops`` counts loop iterations
    (it is at most ``2 * len(weights)``, i.e. construction is linear).
    Zero weights are allowed; their slots end up fully aliased and are
    never returned.
    """
    w = np.asarray(weights, dtype=np.float64)
    k = w.shape[0]
    if k == 0:
        raise ValidationError("cannot build an alias table for an empty weight vector")
    if np.any(w < 0) or not np.all(np.isfinite(w)):
        raise ValidationError("alias weights must be finite and non-negative")
    total = w.sum()
    if total <= 0:
        raise ValidationError("alias weights must not sum to zero")

    scaled = (w / total) * k  # divide first: k/total overflows for subnormal sums
    prob = np.ones(k, dtype=np.float64)
    alias = np.arange(k, dtype=np.int32)
    small = [i for i in range(k) if scaled[i] < 1.0]
    large = [i for i in range(k) if scaled[i] >= 1.0]
    ops = k
    while small and large:
        ops += 1
        s = small.pop()
        l = large.pop()
        prob[s] = scaled[s]
        alias[s] = l
        scaled[l] -= 1.0 - scaled[s]
        if scaled[l] < 1.0:
            small.append(l)
        else:
            large.append(l)
    # leftovers (either stack) are full buckets: prob 1, self-alias
    for i in small:
        ops += 1
        prob[i] = 1.0
        alias[i] = i
    for i in large:
        ops += 1
        prob[i] = 1.0
        alias[i] = i
    return prob, alias, ops


def build_alias_table(weights: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Alias table ``(prob, alias)`` for one weight vector."""
    prob, alias, _ = _walker_tables(weights)
    return prob, alias


@dataclass
class AliasSampler:
    """Per-vertex alias tables over a graph's CSR arc layout.

    ``prob`` and ``alias`` are aligned with the graph's ``nbrs`` array;
    ``alias`` holds slot-local indices (relative to the row start).
    """

    n: int
    indptr: np.ndarray
    nbrs: np.ndarray
    prob: np.ndarray
    alias: np.ndarray

    def row(self, u: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        lo, hi = self.indptr[u], self.indptr[u + 1]
        return self.nbrs[lo:hi], self.prob[lo:hi], self.alias[lo:hi]


def build_alias(g: WeightedGraph) -> AliasSampler:
    """Build alias tables for every vertex of ``g``.

    Rows with no arcs are permitted (the walk never starts a move from
    them in the contexts we use); sampling from such a row raises.
    """
    from ._kernels import build_alias_csr

    prob, alias = build_alias_csr(g.indptr, g.arc_weights)
    return AliasSampler(n=g.n, indptr=g.indptr, nbrs=g.nbrs, prob=prob, alias=alias)


def sample_neighbor(sampler: AliasSampler, u: int, rng: np.random.Generator) -> int:
    """Draw one neighbour of ``u`` with probability weight/degree.

    Consumes exactly two RNG draws (one bounded integer, one uniform),
    independent of the degree.
    """
    lo, hi = sampler.indptr[u], sampler.indptr[u + 1]
    deg = hi - lo
    if deg == 0:
        raise ValidationError(f"vertex {u} has no neighbours to sample")
    slot = int(rng.integers(deg))
    coin = rng.random()
    if coin >= sampler.prob[lo + slot]:
        slot = int(sampler.alias[lo + slot])
    return int(sampler.nbrs[lo + slot])


def sample_neighbor_batch(sampler: AliasSampler, u: int, k: int,
                          rng: np.random.Generator) -> np.ndarray:
    """Vectorized equivalent of ``k`` calls to :func:`sample_neighbor`.

    Uses the same two-draw scheme (bounded integer then coin) on the same
    tables, so the per-draw distribution is identical; only the RNG call
    pattern differs.
    """
    lo, hi = sampler.indptr[u], sampler.indptr[u + 1]
    deg = int(hi - lo)
    if deg == 0:
        raise ValidationError(f"vertex {u} has no neighbours to sample")
    slots = rng.integers(deg, size=k)
    coins = rng.random(k)
    take_alias = coins >= sampler.prob[lo + slots]
    slots = np.where(take_alias, sampler.alias[lo + slots], slots)
    return sampler.nbrs[lo + slots].astype(np.int64)
