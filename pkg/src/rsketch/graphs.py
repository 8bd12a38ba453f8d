"""Weighted undirected graphs in CSR form, generators, and Schur
complement (vertex elimination) operations.

The graph container is deliberately minimal: dense integer vertex ids
``0..n-1``, strictly positive edge weights, no self-loops, no parallel
edges (duplicates are merged at build time).  Everything downstream
(walk kernels, sketches, determinant recursion) consumes the CSR arrays
directly.

Vertex elimination follows the usual rule: removing ``x`` adds, for
every pair of neighbours ``u, v`` of ``x``, a clique edge of weight
``w_ux * w_vx / deg(x)`` on top of whatever edge already exists.  This
preserves effective resistances between the surviving vertices, which is
what the resistance sketches and the determinant recursion rely on.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import ValidationError

__all__ = [
    "WeightedGraph",
    "GraphGeneratorSpec",
    "vertex_set",
    "build_graph",
    "from_dense_weights",
    "is_connected",
    "schur_complement_eliminate_vertex",
    "schur_complement",
    "generate",
]


# =============================================================================
# Container
# =============================================================================


@dataclass
class WeightedGraph:
    """Undirected weighted graph stored as a symmetric CSR adjacency.

    Attributes
    ----------
    n : int
        Number of vertices (ids are ``0..n-1``).
    indptr : ndarray of int64, shape (n+1,)
        CSR row pointers into the arc arrays.
    nbrs : ndarray of int32, shape (2m,)
        Neighbour ids, both directions of every edge.
    arc_weights : ndarray of float64, shape (2m,)
        Weight of each arc (mirrored across directions).
    degrees : ndarray of float64, shape (n,)
        Weighted degree of each vertex, ``degrees[u] == arc_weights[indptr[u]:indptr[u+1]].sum()``.
    edge_u, edge_v : ndarray of int32, shape (m,)
        Canonical edge endpoints with ``edge_u < edge_v``.
    edge_w : ndarray of float64, shape (m,)
        Canonical edge weights.
    """

    n: int
    indptr: np.ndarray
    nbrs: np.ndarray
    arc_weights: np.ndarray
    degrees: np.ndarray
    edge_u: np.ndarray
    edge_v: np.ndarray
    edge_w: np.ndarray

    @property
    def m(self) -> int:
        """Number of (undirected) edges."""
        return int(self.edge_w.shape[0])

    @property
    def total_weight(self) -> float:
        """Sum of edge weights."""
        return float(self.edge_w.sum())

    def weight_ratio(self) -> float:
        """max weight / min weight (1.0 for the empty edge set)."""
        if self.m == 0:
            return 1.0
        return float(self.edge_w.max() / self.edge_w.min())

    def neighbors(self, u: int) -> tuple[np.ndarray, np.ndarray]:
        """Return ``(neighbour_ids, weights)`` views for vertex ``u``."""
        lo, hi = self.indptr[u], self.indptr[u + 1]
        return self.nbrs[lo:hi], self.arc_weights[lo:hi]

    def adjacency_dense(self) -> np.ndarray:
        """Dense symmetric weight matrix (zero diagonal)."""
        a = np.zeros((self.n, self.n), dtype=np.float64)
        a[self.edge_u, self.edge_v] = self.edge_w
        a[self.edge_v, self.edge_u] = self.edge_w
        return a

    def laplacian_dense(self) -> np.ndarray:
        """Dense graph Laplacian ``diag(degrees) - adjacency``."""
        lap = -self.adjacency_dense()
        lap[np.diag_indices(self.n)] = self.degrees
        return lap


# =============================================================================
# Construction and validation
# =============================================================================


def vertex_set(ids: Iterable[int], n: int) -> np.ndarray:
    """Canonicalize a collection of vertex ids into a strictly ascending
    int64 array.

    Raises
    ------
    ValidationError
        If any id is outside ``[0, n)`` or appears more than once.
    """
    arr = np.asarray(sorted(int(i) for i in ids), dtype=np.int64)
    if arr.size:
        if arr[0] < 0 or arr[-1] >= n:
            bad = arr[0] if arr[0] < 0 else arr[-1]
            raise ValidationError(f"vertex id {bad} out of range [0, {n})")
        if np.any(arr[1:] == arr[:-1]):
            dup = int(arr[:-1][arr[1:] == arr[:-1]][0])
            raise ValidationError(f"duplicate vertex id {dup} in vertex set")
    return arr


def build_graph(edges: Sequence[tuple[int, int, float]] | np.ndarray,
                n: int | None = None) -> WeightedGraph:
    """Build a :class:`WeightedGraph` from an ``(u, v, w)`` edge list.

    Duplicate edges (in either orientation) are merged by summing their
    weights.  Self-loops and non-positive weights are rejected.

    Parameters
    ----------
    edges : sequence of (int, int, float)
        Endpoints and weight per edge.
    n : int, optional
        Vertex count.  Defaults to ``max endpoint + 1``.
    """
    if len(edges) == 0:
        if n is None or n <= 0:
            raise ValidationError("empty edge list requires an explicit vertex count n >= 1")
        eu = np.zeros(0, dtype=np.int64)
        ev = np.zeros(0, dtype=np.int64)
        ew = np.zeros(0, dtype=np.float64)
    else:
        arr = np.asarray(edges, dtype=np.float64)
        if arr.ndim != 2 or arr.shape[1] != 3:
            raise ValidationError(f"edge list must have shape (m, 3), got {arr.shape}")
        eu = arr[:, 0].astype(np.int64)
        ev = arr[:, 1].astype(np.int64)
        ew = arr[:, 2].astype(np.float64)
        if np.any(arr[:, 0] != eu) or np.any(arr[:, 1] != ev):
            raise ValidationError("edge endpoints must be integers")
        if np.any(eu == ev):
            u = int(eu[eu == ev][0])
            raise ValidationError(f"self-loop at vertex {u} is not allowed")
        if np.any(ew <= 0) or not np.all(np.isfinite(ew)):
            raise ValidationError("edge weights must be finite and strictly positive")
        lo = np.minimum(eu, ev)
        hi = np.maximum(eu, ev)
        if lo.min() < 0:
            raise ValidationError(f"negative vertex id {int(lo.min())}")
        eu, ev = lo, hi

    if n is None:
        n = int(ev.max()) + 1
    n = int(n)
    if n <= 0:
        raise ValidationError(f"vertex count must be positive, got {n}")
    if len(ew) and int(ev.max()) >= n:
        raise ValidationError(f"edge endpoint {int(ev.max())} out of range for n={n}")

    # merge duplicates by canonical (u, v) key
    if len(ew):
        key = eu * n + ev
        order = np.argsort(key, kind="stable")
        key, eu, ev, ew = key[order], eu[order], ev[order], ew[order]
        uniq, start = np.unique(key, return_index=True)
        merged_w = np.add.reduceat(ew, start)
        eu, ev, ew = eu[start], ev[start], merged_w

    return _assemble(n, eu.astype(np.int32), ev.astype(np.int32), ew)


def _assemble(n: int, eu: np.ndarray, ev: np.ndarray, ew: np.ndarray) -> WeightedGraph:
    """Build CSR arrays from a deduplicated canonical edge list."""
    counts = np.zeros(n, dtype=np.int64)
    np.add.at(counts, eu, 1)
    np.add.at(counts, ev, 1)
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(counts, out=indptr[1:])

    nbrs = np.zeros(2 * len(ew), dtype=np.int32)
    arc_w = np.zeros(2 * len(ew), dtype=np.float64)
    fill = indptr[:-1].copy()
    # two passes keep each row's neighbours grouped; order inside a row is
    # insertion order, which is deterministic given the canonical edge list
    for a, b, w in zip(eu, ev, ew):
        nbrs[fill[a]] = b
        arc_w[fill[a]] = w
        fill[a] += 1
        nbrs[fill[b]] = a
        arc_w[fill[b]] = w
        fill[b] += 1

    degrees = np.zeros(n, dtype=np.float64)
    np.add.at(degrees, eu, ew)
    np.add.at(degrees, ev, ew)
    return WeightedGraph(n=n, indptr=indptr, nbrs=nbrs, arc_weights=arc_w,
                         degrees=degrees, edge_u=eu, edge_v=ev, edge_w=ew)


def from_dense_weights(a: np.ndarray, *, tol: float = 0.0) -> WeightedGraph:
    """Build a graph from a dense symmetric weight matrix.

    Entries with absolute value ``<= tol`` are treated as absent.  The
    diagonal is ignored.
    """
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValidationError(f"weight matrix must be square, got shape {a.shape}")
    if not np.allclose(a, a.T, rtol=0.0, atol=1e-12 * max(1.0, np.abs(a).max())):
        raise ValidationError("weight matrix must be symmetric")
    n = a.shape[0]
    iu, iv = np.triu_indices(n, k=1)
    w = a[iu, iv]
    keep = w > tol
    if np.any(w < -1e-12 * max(1.0, np.abs(a).max())):
        raise ValidationError("weight matrix has negative off-diagonal entries")
    eu = iu[keep].astype(np.int32)
    ev = iv[keep].astype(np.int32)
    return _assemble(n, eu, ev, w[keep].astype(np.float64))


def is_connected(g: WeightedGraph) -> bool:
    """BFS connectivity check."""
    if g.n == 0:
        return True
    seen = np.zeros(g.n, dtype=bool)
    frontier = [0]
    seen[0] = True
    while frontier:
        nxt = []
        for u in frontier:
            lo, hi = g.indptr[u], g.indptr[u + 1]
            for v in g.nbrs[lo:hi]:
                if not seen[v]:
                    seen[v] = True
                    nxt.append(int(v))
        frontier = nxt
    return bool(seen.all())


# =============================================================================
# Schur complements (vertex elimination)
# =============================================================================


def _eliminate_in_place(a: np.ndarray, x: int) -> None:
    """Eliminate vertex ``x`` from a dense weight matrix in place.

    Adds the clique ``w_ux * w_vx / deg(x)`` over the neighbours of ``x``
    and zeroes row/column ``x``.  The diagonal stays zero (the would-be
    self-loop term is dropped; it never affects the Laplacian).
    """
    d = a[x].copy()
    dx = d.sum()
    if dx <= 0.0:
        raise ValidationError(f"cannot eliminate isolated vertex {x}")
    a += np.outer(d, d) / dx
    a[np.diag_indices_from(a)] = 0.0
    a[x, :] = 0.0
    a[:, x] = 0.0


def schur_complement_eliminate_vertex(g: WeightedGraph, x: int) -> WeightedGraph:
    """Eliminate a single vertex; surviving vertices are relabeled to
    ``0..n-2`` in ascending original id order.
    """
    if not 0 <= x < g.n:
        raise ValidationError(f"vertex {x} out of range [0, {g.n})")
    if g.n < 2:
        raise ValidationError("cannot eliminate from a graph with fewer than 2 vertices")
    a = g.adjacency_dense()
    _eliminate_in_place(a, x)
    keep = np.delete(np.arange(g.n), x)
    return from_dense_weights(a[np.ix_(keep, keep)])


def schur_complement(g: WeightedGraph, keep: Iterable[int]) -> WeightedGraph:
    """Eliminate all vertices outside ``keep`` one at a time, in
    ascending id order, and relabel the survivors to ``0..k-1`` (ascending
    original id).

    The result does not depend on the elimination order; ascending order
    is fixed so runs are reproducible bit-for-bit.
    """
    keep_arr = vertex_set(keep, g.n)
    if keep_arr.size == 0:
        raise ValidationError("keep set must be non-empty")
    if keep_arr.size == g.n:
        return build_graph(
            np.column_stack([g.edge_u, g.edge_v, g.edge_w]), n=g.n) if g.m else build_graph([], n=g.n)
    drop = np.setdiff1d(np.arange(g.n), keep_arr)
    a = g.adjacency_dense()
    for x in drop:
        _eliminate_in_place(a, int(x))
    return from_dense_weights(a[np.ix_(keep_arr, keep_arr)])


# =============================================================================
# Generators
# =============================================================================


@dataclass(frozen=True)
class GraphGeneratorSpec:
    """Declarative description of a test-graph family.

    ``kind`` is one of ``complete``, ``random-regular``, ``erdos-renyi``,
    ``dumbbell``.  ``weight_low == weight_high == 1`` means unit weights;
    otherwise each edge weight is drawn uniformly from
    ``[weight_low, weight_high]``.
    """

    kind: str
    n: int
    d: int | None = None
    p: float | None = None
    weight_low: float = 1.0
    weight_high: float = 1.0

    def __post_init__(self):
        if self.kind not in ("complete", "random-regular", "erdos-renyi", "dumbbell"):
            raise ValidationError(f"unknown graph kind {self.kind!r}")
        if self.n < 2:
            raise ValidationError(f"need at least 2 vertices, got n={self.n}")
        if self.kind == "random-regular":
            if self.d is None or self.d < 1 or self.d >= self.n:
                raise ValidationError(f"random-regular requires 1 <= d < n, got d={self.d}")
            if (self.n * self.d) % 2 != 0:
                raise ValidationError(f"n*d must be even for a d-regular graph (n={self.n}, d={self.d})")
        if self.kind == "erdos-renyi":
            if self.p is None or not 0.0 < self.p <= 1.0:
                raise ValidationError(f"erdos-renyi requires 0 < p <= 1, got p={self.p}")
        if not (0.0 < self.weight_low <= self.weight_high):
            raise ValidationError(
                f"need 0 < weight_low <= weight_high, got [{self.weight_low}, {self.weight_high}]")


_MAX_GENERATOR_TRIES = 2000


def _simple_regular_edges(n: int, d: int, rng: np.random.Generator) -> list[tuple[int, int]] | None:
    """One pairing-model attempt at a simple d-regular graph.

    Stubs are matched one random pair at a time, rejecting self-loops and
    duplicate edges locally; a stuck tail (e.g. the last two stubs belong
    to the same vertex) aborts the attempt and the caller restarts.
    """
    stubs = np.repeat(np.arange(n), d)
    rng.shuffle(stubs)
    stubs = stubs.tolist()
    edges: set[tuple[int, int]] = set()
    budget = 200 * n * d
    while stubs:
        if budget <= 0:
            return None
        budget -= 1
        i = int(rng.integers(len(stubs)))
        j = int(rng.integers(len(stubs)))
        if i == j:
            continue
        u, v = stubs[i], stubs[j]
        if u == v:
            continue
        e = (u, v) if u < v else (v, u)
        if e in edges:
            continue
        edges.add(e)
        # swap-pop the two consumed stubs (larger index first)
        if i < j:
            i, j = j, i
        stubs[i] = stubs[-1]
        stubs.pop()
        stubs[j] = stubs[-1]
        stubs.pop()
    return sorted(edges)


def generate(spec: GraphGeneratorSpec, seed: int) -> WeightedGraph:
    """Generate a graph from a :class:`GraphGeneratorSpec`.

    Deterministic in ``(spec, seed)``.  Random kinds are resampled until
    simple/connected (bounded retries), so the returned graph is always
    connected.

    Raises
    ------
    ConvergenceError
        If the retry budget runs out (pathological parameter choices).
    """
    from .errors import ConvergenceError

    rng = np.random.Generator(np.random.Philox(key=_gen_key(spec, seed)))

    if spec.kind == "complete":
        iu, iv = np.triu_indices(spec.n, k=1)
        pairs = list(zip(iu.tolist(), iv.tolist()))
    elif spec.kind == "dumbbell":
        half = spec.n // 2
        pairs = []
        for block, size in ((0, half), (half, spec.n - half)):
            for i in range(size):
                for j in range(i + 1, size):
                    pairs.append((block + i, block + j))
        pairs.append((0, half))  # the bridge
    elif spec.kind == "random-regular":
        pairs = None
        for _ in range(_MAX_GENERATOR_TRIES):
            attempt = _simple_regular_edges(spec.n, spec.d, rng)
            if attempt is not None and _pairs_connected(spec.n, attempt):
                pairs = attempt
                break
        if pairs is None:
            raise ConvergenceError(
                f"failed to generate a simple connected {spec.d}-regular graph on "
                f"{spec.n} vertices after {_MAX_GENERATOR_TRIES} tries")
    else:  # erdos-renyi
        pairs = None
        for _ in range(_MAX_GENERATOR_TRIES):
            iu, iv = np.triu_indices(spec.n, k=1)
            mask = rng.random(iu.shape[0]) < spec.p
            attempt = list(zip(iu[mask].tolist(), iv[mask].tolist()))
            if attempt and _pairs_connected(spec.n, attempt):
                pairs = attempt
                break
        if pairs is None:
            raise ConvergenceError(
                f"failed to generate a connected G({spec.n}, {spec.p}) after "
                f"{_MAX_GENERATOR_TRIES} tries (p too small?)")

    if spec.weight_low == spec.weight_high:
        weights = np.full(len(pairs), spec.weight_low, dtype=np.float64)
    else:
        weights = rng.uniform(spec.weight_low, spec.weight_high, size=len(pairs))
    edges = [(u, v, float(w)) for (u, v), w in zip(pairs, weights)]
    return build_graph(edges, n=spec.n)


def _gen_key(spec: GraphGeneratorSpec, seed: int):
    from .rngutil import derive_key
    kind_code = ("complete", "random-regular", "erdos-renyi", "dumbbell").index(spec.kind)
    p_bits = np.float64(spec.p if spec.p is not None else -1.0).view(np.uint64)
    w_lo = np.float64(spec.weight_low).view(np.uint64)
    w_hi = np.float64(spec.weight_high).view(np.uint64)
    return derive_key(seed, kind_code, spec.n, spec.d if spec.d is not None else -1,
                      int(p_bits), int(w_lo), int(w_hi))


def _pairs_connected(n: int, pairs: list[tuple[int, int]]) -> bool:
    adj: list[list[int]] = [[] for _ in range(n)]
    for u, v in pairs:
        adj[u].append(v)
        adj[v].append(u)
    seen = [False] * n
    seen[0] = True
    stack = [0]
    while stack:
        u = stack.pop()
        for v in adj[u]:
            if not seen[v]:
                seen[v] = True
                stack.append(v)
    return all(seen)
