"""Lazy random walks, explicit and implicit.

The walk used everywhere in this package is half-lazy: at each step stay
put with probability 1/2, otherwise move across an incident edge chosen
proportionally to its weight.

:class:`SchurWalker` runs the same walk on the graph obtained by
eliminating one vertex, *without* materializing the elimination clique.
A move from ``u`` either uses an original edge (probability
``base_degree / new_degree``) or goes through the eliminated vertex, in
which case the target is drawn from the eliminated vertex's neighbour
distribution with a self-rejection loop.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .alias import AliasSampler, build_alias, build_alias_table, sample_neighbor
from .errors import CapabilityError, ValidationError
from .graphs import WeightedGraph, schur_complement_eliminate_vertex

__all__ = [
    "LazyWalkConfig",
    "stationary_distribution",
    "lazy_step",
    "walk_endpoint",
    "SchurWalker",
    "schur_lazy_step",
    "schur_step_empirical",
]

# Expected rejection count for a clique step is 1/(1 - w_ux/deg(x)); this
# cap keeps it below 1000 tries on average.
_MAX_SLACK_FRACTION = 0.999


@dataclass(frozen=True)
class LazyWalkConfig:
    """Walk parameters.  Only the half-lazy walk is supported: every
    convergence constant downstream is derived for laziness exactly 1/2.
    """

    laziness: float = 0.5

    def __post_init__(self):
        if self.laziness != 0.5:
            raise ValidationError(
                f"only the half-lazy walk is supported, got laziness={self.laziness}")


def stationary_distribution(g: WeightedGraph) -> np.ndarray:
    """Degree-proportional stationary distribution of the lazy walk."""
    total = g.degrees.sum()
    if total <= 0:
        raise ValidationError("stationary distribution undefined: graph has no edges")
    return g.degrees / total


def lazy_step(g: WeightedGraph, sampler: AliasSampler, u: int,
              rng: np.random.Generator,
              config: LazyWalkConfig = LazyWalkConfig()) -> int:
    """One step of the lazy walk from ``u``.

    Consumes one coin, plus the sampler's two draws when the walk moves.
    """
    if not 0 <= u < g.n:
        raise ValidationError(f"vertex {u} out of range [0, {g.n})")
    if rng.random() < config.laziness:
        return u
    return sample_neighbor(sampler, u, rng)


def walk_endpoint(g: WeightedGraph, sampler: AliasSampler, u: int, length: int,
                  rng: np.random.Generator,
                  config: LazyWalkConfig = LazyWalkConfig()) -> int:
    """Endpoint of a fresh length-``length`` lazy walk started at ``u``."""
    if length < 0:
        raise ValidationError(f"walk length must be non-negative, got {length}")
    cur = u
    for _ in range(length):
        cur = lazy_step(g, sampler, cur, rng, config)
    return cur


# =============================================================================
# Implicit walk on a single-vertex Schur complement
# =============================================================================


@dataclass
class SchurWalker:
    """Walk on ``eliminate(source, x)`` driven only by ``source``'s edges.

    Attributes
    ----------
    n : int
        Number of surviving vertices (relabeled ``0..n-1``, ascending
        original id).
    base : WeightedGraph
        ``source`` restricted to the survivors (original edges only).
    slack : ndarray
        Weight of each survivor's edge to the eliminated vertex
        (zero when absent).  ``slack.sum()`` is the eliminated degree.
    clique_degrees : ndarray
        Degree each survivor gains from the elimination clique:
        ``slack - slack**2 / slack.sum()``.
    new_degrees : ndarray
        Degrees in the eliminated graph: base degree + clique degree.
    base_prob : ndarray
        Probability that a real move from each vertex uses a base edge.
    """

    n: int
    base: WeightedGraph
    slack: np.ndarray
    clique_degrees: np.ndarray
    new_degrees: np.ndarray
    base_prob: np.ndarray
    base_sampler: AliasSampler
    clique_prob: np.ndarray
    clique_alias: np.ndarray
    source: WeightedGraph = field(repr=False)
    eliminated: int = field(repr=False, default=-1)

    @classmethod
    def from_elimination(cls, source: WeightedGraph, x: int) -> "SchurWalker":
        if not 0 <= x < source.n:
            raise ValidationError(f"vertex {x} out of range [0, {source.n})")
        if source.n < 3:
            raise ValidationError("implicit elimination needs at least 2 surviving vertices")

        keep = np.delete(np.arange(source.n), x)
        relabel = np.full(source.n, -1, dtype=np.int64)
        relabel[keep] = np.arange(source.n - 1)

        slack = np.zeros(source.n - 1, dtype=np.float64)
        xn, xw = source.neighbors(x)
        slack[relabel[xn]] = xw
        d_x = slack.sum()
        if d_x <= 0:
            raise ValidationError(f"vertex {x} is isolated; nothing to eliminate")
        if slack.max() / d_x > _MAX_SLACK_FRACTION:
            raise CapabilityError(
                f"one survivor holds {slack.max() / d_x:.6f} of the eliminated degree; "
                f"the self-rejection loop would be unbounded (limit {_MAX_SLACK_FRACTION})")

        base_edges = [
            (int(relabel[a]), int(relabel[b]), float(w))
            for a, b, w in zip(source.edge_u, source.edge_v, source.edge_w)
            if a != x and b != x
        ]
        from .graphs import build_graph
        base = build_graph(base_edges, n=source.n - 1) if base_edges else build_graph([], n=source.n - 1)

        clique_deg = slack - slack * slack / d_x
        new_deg = base.degrees + clique_deg
        if np.any(new_deg <= 0):
            dead = int(np.flatnonzero(new_deg <= 0)[0])
            raise ValidationError(
                f"vertex {dead} would be isolated after eliminating {x}")
        cprob, calias = build_alias_table(slack)
        return cls(
            n=source.n - 1,
            base=base,
            slack=slack,
            clique_degrees=clique_deg,
            new_degrees=new_deg,
            base_prob=base.degrees / new_deg,
            base_sampler=build_alias(base),
            clique_prob=cprob,
            clique_alias=calias,
            source=source,
            eliminated=x,
        )

    def stationary(self) -> np.ndarray:
        return self.new_degrees / self.new_degrees.sum()

    def expected_clique_draws(self, u: int) -> float:
        """Mean number of draws a clique step from ``u`` needs."""
        return float(1.0 / (1.0 - self.slack[u] / self.slack.sum()))

    def to_explicit_graph(self) -> WeightedGraph:
        """Materialized elimination, for verification."""
        return schur_complement_eliminate_vertex(self.source, self.eliminated)


def _clique_draw(walker: SchurWalker, rng: np.random.Generator) -> int:
    k = walker.n
    slot = int(rng.integers(k))
    if rng.random() >= walker.clique_prob[slot]:
        slot = int(walker.clique_alias[slot])
    return slot


def schur_lazy_step(walker: SchurWalker, u: int, rng: np.random.Generator) -> int:
    """One lazy step of the eliminated-vertex walk from ``u``.

    Matches the explicit walk on ``walker.to_explicit_graph()``
    distribution-for-distribution: stay with probability 1/2; otherwise
    take a base edge with probability ``base_prob[u]``, else draw from
    the eliminated vertex's neighbour distribution until the draw is not
    ``u`` itself.
    """
    if not 0 <= u < walker.n:
        raise ValidationError(f"vertex {u} out of range [0, {walker.n})")
    if rng.random() < 0.5:
        return u
    if rng.random() < walker.base_prob[u]:
        return sample_neighbor(walker.base_sampler, u, rng)
    while True:
        v = _clique_draw(walker, rng)
        if v != u:
            return v


def schur_step_empirical(walker: SchurWalker, u: int, k: int,
                         rng: np.random.Generator) -> np.ndarray:
    """Empirical distribution of ``k`` independent single steps from ``u``.

    Vectorized but draw-for-draw equivalent to calling
    :func:`schur_lazy_step` ``k`` times: same coins, same alias tables,
    same self-rejection rule.  Returns frequencies summing to one.
    """
    out = np.zeros(walker.n, dtype=np.int64)
    lazy = rng.random(k) < 0.5
    out[u] += int(lazy.sum())
    movers = int(k - lazy.sum())

    take_base = rng.random(movers) < walker.base_prob[u]
    n_base = int(take_base.sum())
    if n_base:
        from .alias import sample_neighbor_batch
        targets = sample_neighbor_batch(walker.base_sampler, u, n_base, rng)
        np.add.at(out, targets, 1)

    pending = movers - n_base
    while pending:
        slots = rng.integers(walker.n, size=pending)
        coins = rng.random(pending)
        chosen = np.where(coins < walker.clique_prob[slots],
                          slots, walker.clique_alias[slots]).astype(np.int64)
        accepted = chosen[chosen != u]
        np.add.at(out, accepted, 1)
        pending = int((chosen == u).sum())
    return out / float(k)
