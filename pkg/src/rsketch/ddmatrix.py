"""Strictly diagonally dominant matrices and their Laplacian completions.

A symmetric matrix ``M`` with positive diagonal and non-positive
off-diagonals is ``(1+alpha)``-DD when every row satisfies

    M[u, u] >= (1 + alpha) * sum_v |M[u, v]|.

Such a matrix is exactly the top-left block of the Laplacian of a graph
with one extra vertex: connect ``u`` and ``v`` with weight ``-M[u, v]``,
and connect each ``u`` to the extra vertex with the row slack
``M[u, u] - sum |M[u, v]|``.  Then ``det(M)`` equals the spanning-tree
determinant of that completion, and eliminating the extra vertex gives a
graph whose effective resistances are governed by ``M`` itself — with a
spectral gap at least ``alpha / (1 + alpha)``, regardless of how bad the
gap of the off-diagonal part is.  That floor is what lets resistance
sketches run on DD systems with provable walk horizons.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .graphs import WeightedGraph, build_graph
from .sketch import ResistanceSketch, SketchParams, build_sketch_implicit, compute_params
from .walks import SchurWalker

__all__ = [
    "DDMatrix",
    "LaplacianCompletion",
    "validate_dd",
    "certified_alpha",
    "complete_to_laplacian",
    "dd_effective_resistance_sketch",
    "find_dd_subset",
]

# Row check tolerance is relative to the diagonal entry, so rows of very
# different scales are judged evenly.
_DD_TOL_SCALE = 1e-12


def _check_dominance(values: np.ndarray, scale: float) -> None:
    """Plain diagonal dominance (each row's diagonal covers its
    off-diagonal mass); raises naming the worst row."""
    diag = np.diag(values)
    offsum = np.abs(values).sum(axis=1) - np.abs(diag)
    margin = diag - offsum
    if np.any(margin < -_DD_TOL_SCALE * scale):
        worst = int(np.argmin(margin))
        raise ValidationError(
            f"matrix is not diagonally dominant: row {worst} has diagonal "
            f"{diag[worst]!r} < off-diagonal sum {offsum[worst]!r}")


@dataclass
class DDMatrix:
    """Dense symmetric diagonally dominant matrix with the sign pattern
    required for a Laplacian completion (positive diagonal,
    off-diagonals <= 0)."""

    n: int
    values: np.ndarray

    @classmethod
    def from_dense(cls, a: np.ndarray) -> "DDMatrix":
        a = np.asarray(a, dtype=np.float64)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValidationError(f"matrix must be square, got shape {a.shape}")
        scale = max(1.0, float(np.abs(a).max()))
        if not np.allclose(a, a.T, rtol=0.0, atol=1e-12 * scale):
            raise ValidationError("matrix must be symmetric")
        off = a - np.diag(np.diag(a))
        if np.any(off > 1e-12 * scale):
            u, v = np.unravel_index(int(np.argmax(off)), off.shape)
            raise ValidationError(
                f"off-diagonal entry ({u}, {v}) = {a[u, v]!r} is positive; "
                "only non-positive couplings admit a Laplacian completion")
        if np.any(np.diag(a) <= 0):
            u = int(np.flatnonzero(np.diag(a) <= 0)[0])
            raise ValidationError(f"diagonal entry {u} = {a[u, u]!r} is not positive")
        sym = 0.5 * (a + a.T)
        off_mask = ~np.eye(a.shape[0], dtype=bool)
        sym[off_mask & (sym > 0)] = 0.0  # tolerated tiny positives round to absent
        _check_dominance(sym, scale)
        return cls(n=a.shape[0], values=sym)

    @classmethod
    def from_entries(cls, n: int, entries) -> "DDMatrix":
        """Build from ``(u, v, value)`` triples; symmetric entries may be
        given once.  Duplicate off-diagonal entries must agree."""
        a = np.zeros((n, n), dtype=np.float64)
        seen = np.zeros((n, n), dtype=bool)
        for u, v, val in entries:
            u, v = int(u), int(v)
            if not (0 <= u < n and 0 <= v < n):
                raise ValidationError(f"entry ({u}, {v}) out of range for n={n}")
            if seen[u, v] and a[u, v] != val:
                raise ValidationError(
                    f"conflicting values for entry ({u}, {v}): {a[u, v]!r} vs {val!r}")
            a[u, v] = a[v, u] = float(val)
            seen[u, v] = seen[v, u] = True
        return cls.from_dense(a)

    def row_slack(self) -> np.ndarray:
        """Per-row ``M[u,u] - sum_v |M[u,v]|`` (the completion's edge
        weights to the extra vertex)."""
        off_sums = np.abs(self.values).sum(axis=1) - np.abs(np.diag(self.values))
        return np.diag(self.values) - off_sums

    def off_diagonal_sums(self) -> np.ndarray:
        return np.abs(self.values).sum(axis=1) - np.abs(np.diag(self.values))


def certified_alpha(m: DDMatrix) -> float:
    """Largest ``alpha`` for which ``m`` is ``(1+alpha)``-DD.

    Rows with no off-diagonal mass impose no constraint (they behave as
    infinitely dominant); a matrix that is diagonal everywhere returns
    ``inf``.
    """
    diag = np.diag(m.values)
    off = m.off_diagonal_sums()
    active = off > 0
    if not np.any(active):
        return float("inf")
    return float((diag[active] / off[active]).min() - 1.0)


def validate_dd(m: DDMatrix, alpha: float) -> None:
    """Check ``M[u,u] >= (1+alpha) * sum |M[u,v]|`` for every row, with a
    small relative tolerance on the diagonal scale.

    Raises
    ------
    ValidationError
        Reporting the worst-violating row.
    """
    if alpha < 0:
        raise ValidationError(f"alpha must be non-negative, got {alpha}")
    diag = np.diag(m.values)
    need = (1.0 + alpha) * m.off_diagonal_sums()
    margin = diag - need + _DD_TOL_SCALE * diag
    if np.any(margin < 0):
        worst = int(np.argmin(margin))
        raise ValidationError(
            f"matrix is not (1+{alpha:g})-diagonally dominant: row {worst} has "
            f"diagonal {diag[worst]!r} < required {need[worst]!r}")


# =============================================================================
# Completion
# =============================================================================


@dataclass
class LaplacianCompletion:
    """Laplacian completion of a DD matrix.

    ``graph`` has ``n + 1`` vertices; vertex ``extra`` (== n) carries the
    row slacks.  The original matrix is exactly the Laplacian of
    ``graph`` with row/column ``extra`` deleted.
    """

    graph: WeightedGraph
    extra: int
    slack: np.ndarray


def complete_to_laplacian(m: DDMatrix) -> LaplacianCompletion:
    """Embed ``m`` as the top-left block of an ``(n+1)``-vertex Laplacian.

    Requires strict dominance somewhere in every row (``alpha > 0``
    overall), since zero slack would leave the extra vertex disconnected
    from that row.
    """
    validate_dd(m, 0.0)
    slack = m.row_slack()
    n = m.n
    edges: list[tuple[int, int, float]] = []
    iu, iv = np.triu_indices(n, k=1)
    w = -m.values[iu, iv]
    for u, v, wt in zip(iu, iv, w):
        if wt > 0.0:
            edges.append((int(u), int(v), float(wt)))
    for u in range(n):
        if slack[u] > 0.0:
            edges.append((u, n, float(slack[u])))
    if not any(v == n for _, v, _ in edges):
        raise ValidationError(
            "every row slack is zero: the matrix is itself a Laplacian "
            "(singular), not strictly dominant")
    g = build_graph(edges, n=n + 1)
    return LaplacianCompletion(graph=g, extra=n, slack=slack)


# =============================================================================
# Resistance sketches for DD systems
# =============================================================================


def dd_effective_resistance_sketch(m: DDMatrix, alpha: float, epsilon: float,
                                   seed: int, c_t0: float = 2.0, c_s: float = 4.0,
                                   workers: int = 1
                                   ) -> tuple[ResistanceSketch, SchurWalker]:
    """Sketch the effective resistances induced by a ``(1+alpha)``-DD
    matrix without ever materializing the eliminated graph.

    The walk runs implicitly on the completion's single-vertex Schur
    complement; its spectral gap is bounded below by ``alpha/(1+alpha)``,
    which parameterizes the walk horizon.  Returns the sketch along with
    the walker (the walker carries the eliminated graph's degrees).
    """
    validate_dd(m, alpha)
    if alpha <= 0:
        raise ValidationError(
            f"resistance sketching needs strict dominance (alpha > 0), got {alpha}")
    comp = complete_to_laplacian(m)
    walker = SchurWalker.from_elimination(comp.graph, comp.extra)
    nu2 = alpha / (1.0 + alpha)
    params = compute_params(walker.n, _schur_weight_ratio_bound(walker),
                            epsilon, nu2, c_t0=c_t0, c_s=c_s)
    sk = build_sketch_implicit(walker, params, seed, workers=workers)
    return sk, walker


def _schur_weight_ratio_bound(walker: SchurWalker) -> float:
    """Conservative max/min weight ratio of the implicit eliminated
    graph, from quantities we can read without materializing it.

    Every pair with positive slack is joined by a clique edge, so the two
    smallest (and two largest) positive slacks bound the clique weights;
    base edges bound themselves.
    """
    d_x = walker.slack.sum()
    pos = np.sort(walker.slack[walker.slack > 0])
    hi_candidates = []
    lo_candidates = []
    if pos.size >= 2:
        lo_candidates.append(pos[0] * pos[1] / d_x)
        hi_candidates.append(pos[-1] * pos[-2] / d_x)
    if walker.base.m > 0:
        lo_candidates.append(float(walker.base.edge_w.min()))
        hi_candidates.append(float(walker.base.edge_w.max()) + (pos[-1] * pos[-2] / d_x
                                                                if pos.size >= 2 else 0.0))
    if not lo_candidates:
        return 1.0
    return max(1.0, max(hi_candidates) / min(lo_candidates))


# =============================================================================
# Dominant-subset extraction (for the determinant recursion)
# =============================================================================


def find_dd_subset(g: WeightedGraph, alpha: float = 1.0,
                   rng: np.random.Generator | None = None,
                   max_tries: int = 200) -> np.ndarray:
    """Find a vertex subset S whose induced Laplacian block (with the
    *full* graph degrees on the diagonal) is ``(1+alpha)``-DD.

    Each try samples vertices independently with probability
    ``1/(2(1+alpha))`` and then discards, simultaneously, every sampled
    vertex whose edge weight to the outside falls short of ``alpha``
    times its weight inside the sample.  Discarding only shrinks
    surviving vertices' inside weight, so a single pass is sound.

    Tries are repeated until the subset reaches ``n/8`` vertices (the
    expected yield is about ``n/4``); if the retry budget is spent, a
    greedy independent set — valid for any alpha, possibly smaller — is
    returned instead.  The complement is always left non-empty.
    """
    if alpha <= 0:
        raise ValidationError(f"alpha must be positive, got {alpha}")
    if g.n < 2:
        raise ValidationError("subset extraction needs at least 2 vertices")
    if rng is None:
        rng = np.random.default_rng(0)

    adj = None  # dense rows materialized lazily, only if a try succeeds partially
    p_include = 1.0 / (2.0 * (1.0 + alpha))
    target = g.n / 8.0
    best = np.zeros(0, dtype=np.int64)

    for _ in range(max_tries):
        mask = rng.random(g.n) < p_include
        if not mask.any():
            continue
        if adj is None:
            adj = g.adjacency_dense()
        inside = adj[:, mask].sum(axis=1)
        outside = g.degrees - inside
        keep = mask & (outside >= alpha * inside)
        size = int(keep.sum())
        if size == g.n:  # pathological; the recursion needs a non-empty complement
            keep[np.flatnonzero(keep)[-1]] = False
            size -= 1
        if size > best.size:
            best = np.flatnonzero(keep).astype(np.int64)
        if size >= target and size >= 1:
            return np.flatnonzero(keep).astype(np.int64)

    if best.size >= 1:
        return best

    # deterministic fallback: a greedy independent set has no inside mass
    chosen: list[int] = []
    taken = np.zeros(g.n, dtype=bool)
    for u in range(g.n - 1):  # leave at least the last vertex outside
        if taken[u]:
            continue
        chosen.append(u)
        nbr, _ = g.neighbors(u)
        taken[nbr] = True
        taken[u] = True
    return np.asarray(chosen, dtype=np.int64)
