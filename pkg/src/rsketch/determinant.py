"""Approximate log spanning-tree determinants via recursive splitting.

``det_approx`` estimates ``log det+ L`` (the spanning-tree determinant:
any cofactor of the Laplacian) to additive accuracy ``log(1 + delta)``
with a recursion that never does dense work above the base size:

1. pick a vertex subset whose induced Laplacian block is strongly
   diagonally dominant (``find_dd_subset``);
2. split: ``det+ L = det(block) * det+ Schur(L, complement)``;
3. the block determinant reduces, through its Laplacian completion, to
   another spanning-tree determinant with a certified spectral gap;
4. both factors are Schur complements, so their effective resistances
   are readable from sketches built on the *current* graph (or on the
   completion's implicit walk) — these drive importance sampling that
   sparsifies each factor back to ``~ k^{1.5}/delta_level`` edges before
   recursing;
5. at ``n <= base_cap`` everything is answered exactly by dense
   elimination.

The per-level budget ``delta_level`` is fixed once at the top:
``delta / (split_constant * estimated_depth)``.  Every sparsification
event spends one ``delta_level``; the recorded trace accounts for each.

Sketches embedded in this recursion default to lighter constants
(``sketch_c_t0``/``sketch_c_s``) than standalone sketches: the
sparsifier only consumes resistances through sampling probabilities, so
per-entry accuracy far beyond ``epsilon_r`` buys nothing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .ddmatrix import (DDMatrix, certified_alpha,
                       dd_effective_resistance_sketch, find_dd_subset, validate_dd)
from .errors import CapabilityError, ConvergenceError, ValidationError
from .graphs import WeightedGraph, build_graph, is_connected, schur_complement
from .oracle import matrix_tree_log_count
from .rngutil import derive_key, stream
from .sketch import build_sketch, compute_params, estimate_spectral_gap, query_batch

__all__ = [
    "SparsifyParams",
    "DetConfig",
    "LogDetEstimate",
    "exact_log_det_plus",
    "det_sparsify",
    "det_approx",
    "dd_det_approx",
]

EXACT_BASE_CAP = 64


# =============================================================================
# Parameters and results
# =============================================================================


@dataclass(frozen=True)
class SparsifyParams:
    """Edge-sampling parameters for one sparsification event.

    ``s = ceil(n^1.5 / delta)`` samples and resistance accuracy
    ``epsilon_r = n^(-1/4) sqrt(delta)`` balance the two error sources:
    both ``n^2 epsilon_r^2 / s`` and ``n^3 / s^2`` stay at or below
    ``delta^2`` (checked at construction).
    """

    n: int
    delta: float
    s: int
    epsilon_r: float

    @classmethod
    def from_target(cls, n: int, delta: float) -> "SparsifyParams":
        if n < 2:
            raise ValidationError(f"sparsification needs n >= 2, got {n}")
        if not (0.0 < delta <= 1.0):
            raise ValidationError(f"delta must be in (0, 1], got {delta}")
        s = math.ceil(n ** 1.5 / delta)
        eps = n ** -0.25 * math.sqrt(delta)
        return cls(n=n, delta=delta, s=s, epsilon_r=eps)

    def __post_init__(self):
        d2 = self.delta ** 2 * (1.0 + 1e-9)
        var_term = self.n ** 2 * self.epsilon_r ** 2 / self.s
        count_term = self.n ** 3 / self.s ** 2
        if var_term > d2 or count_term > d2:
            raise ValidationError(
                f"inconsistent sparsify parameters: n^2 eps^2/s = {var_term:g}, "
                f"n^3/s^2 = {count_term:g} must both be <= delta^2 = {self.delta ** 2:g}")

    @property
    def reweight(self) -> float:
        """Per-edge weight correction for finite sample count."""
        return math.exp(self.n ** 2 / (2.0 * (self.n - 1) * self.s))


@dataclass(frozen=True)
class DetConfig:
    """Knobs of the determinant recursion (all optional)."""

    base_cap: int = EXACT_BASE_CAP
    alpha: float = 1.0
    split_constant: float = 1.0
    sketch_c_t0: float = 1.5
    sketch_c_s: float = 1.0
    gap_tol: float = 0.02
    gap_floor: float = 1e-4
    workers: int = 1
    max_sparsify_retries: int = 3

    def __post_init__(self):
        if self.base_cap < 2:
            raise ValidationError(f"base_cap must be >= 2, got {self.base_cap}")
        if self.alpha <= 0:
            raise ValidationError(f"alpha must be positive, got {self.alpha}")
        if self.split_constant <= 0:
            raise ValidationError(f"split_constant must be positive, got {self.split_constant}")


@dataclass
class LogDetEstimate:
    """Result of a determinant estimation run.

    ``log_value`` is the natural log of the spanning-tree determinant;
    ``delta_budget_spent`` sums the per-level allocations actually
    consumed by sparsification events; ``trace`` records one dict per
    recursion event for inspection.
    """

    log_value: float
    n: int
    delta: float
    seed: int
    delta_budget_spent: float = 0.0
    trace: list[dict] = field(default_factory=list)


# =============================================================================
# Exact base cases
# =============================================================================


def exact_log_det_plus(g: WeightedGraph, cap: int = EXACT_BASE_CAP) -> float:
    """Exact log spanning-tree determinant for base-case graphs.

    Refuses graphs larger than ``cap`` — this is the recursion's exact
    bottom, not a general-purpose oracle.
    """
    if g.n > cap:
        raise CapabilityError(
            f"exact base case supports n <= {cap}, got n={g.n}")
    return matrix_tree_log_count(g)


def _log_det_dense_pd(values: np.ndarray, what: str) -> float:
    sign, logdet = np.linalg.slogdet(values)
    if sign <= 0:
        raise ValidationError(f"{what} is not positive definite (slogdet sign {sign})")
    return float(logdet)


# =============================================================================
# Sparsification
# =============================================================================


def det_sparsify(g: WeightedGraph, resistances: np.ndarray, params: SparsifyParams,
                 rng: np.random.Generator) -> WeightedGraph:
    """Resample ``g`` down to at most ``params.s`` edges while preserving
    its spanning-tree determinant to relative ``(1 + delta)``.

    Edges are drawn i.i.d. (realized as one multinomial) with probability
    proportional to ``weight * resistance`` (approximate leverage);
    a sampled edge keeps expectation ``weight`` through the
    ``count / (s p_e)`` correction, times the fixed ``reweight`` factor
    that cancels the finite-sample determinant bias.
    """
    resistances = np.asarray(resistances, dtype=np.float64)
    if g.n != params.n:
        raise ValidationError(f"graph has n={g.n} but params were sized for n={params.n}")
    if resistances.shape != (g.m,):
        raise ValidationError(
            f"need one resistance per edge: got {resistances.shape}, graph has m={g.m}")
    if g.m == 0:
        raise ValidationError("cannot sparsify an edgeless graph")
    if np.any(~np.isfinite(resistances)) or np.any(resistances <= 0):
        raise ValidationError("edge resistances must be finite and positive")

    mass = g.edge_w * resistances
    p = mass / mass.sum()
    counts = rng.multinomial(params.s, p)
    nz = np.flatnonzero(counts)
    new_w = counts[nz] * g.edge_w[nz] / (params.s * p[nz]) * params.reweight
    edges = np.column_stack([g.edge_u[nz], g.edge_v[nz], new_w])
    return build_graph(edges, n=g.n)


# =============================================================================
# The recursion
# =============================================================================


@dataclass
class _Ctx:
    seed: int
    config: DetConfig
    delta_level: float
    depth_guard: int
    trace: list[dict]
    spent: float = 0.0
    _ids: int = 0

    def next_id(self) -> int:
        self._ids += 1
        return self._ids


def _sparsify_connected(g: WeightedGraph, resistances: np.ndarray,
                        params: SparsifyParams, ctx: _Ctx, tag: int) -> WeightedGraph:
    """Sparsify, resampling (bounded, deterministic) if the draw happens
    to disconnect the graph."""
    node = ctx.next_id()
    for attempt in range(ctx.config.max_sparsify_retries):
        h = det_sparsify(g, resistances, params, stream(ctx.seed, tag, node, attempt))
        if is_connected(h):
            ctx.spent += params.delta
            return h
    raise ConvergenceError(
        f"sparsifier disconnected the graph {ctx.config.max_sparsify_retries} times "
        f"(n={g.n}, s={params.s}); the input is unlikely to be an expander")


def _measure_gap(g: WeightedGraph, ctx: _Ctx) -> float:
    nu2 = estimate_spectral_gap(g, tol=ctx.config.gap_tol,
                                seed=derive_key(ctx.seed, 0xE5, ctx.next_id()))
    if nu2 < ctx.config.gap_floor:
        raise ConvergenceError(
            f"estimated spectral gap {nu2:.2e} is below the floor "
            f"{ctx.config.gap_floor:.0e}; refusing to walk a non-expander")
    return nu2


def _dd_block_matrix(g: WeightedGraph, subset: np.ndarray) -> DDMatrix:
    """Laplacian block L[S, S] with full graph degrees on the diagonal."""
    a = g.adjacency_dense()[np.ix_(subset, subset)]
    values = -a
    values[np.diag_indices(subset.size)] = g.degrees[subset]
    return DDMatrix(n=subset.size, values=values)


def _log_det_dd_block(g: WeightedGraph, subset: np.ndarray, level: int, ctx: _Ctx) -> float:
    """log det of the dominant block, exactly or through its completion."""
    m = _dd_block_matrix(g, subset)
    if m.n <= ctx.config.base_cap:
        ctx.trace.append({"level": level, "kind": "dd-block-exact", "n": m.n})
        return _log_det_dense_pd(m.values, "dominant block")
    validate_dd(m, ctx.config.alpha)
    sp = SparsifyParams.from_target(m.n, ctx.delta_level)
    sk, walker = dd_effective_resistance_sketch(
        m, ctx.config.alpha, sp.epsilon_r,
        seed=derive_key(ctx.seed, 0xD0, ctx.next_id()),
        c_t0=ctx.config.sketch_c_t0, c_s=ctx.config.sketch_c_s,
        workers=ctx.config.workers)
    eliminated = walker.to_explicit_graph()
    pairs = np.column_stack([eliminated.edge_u, eliminated.edge_v])
    r_est = query_batch(sk, pairs)
    h = _sparsify_connected(eliminated, r_est, sp, ctx, 0xA1)
    d_x = float(walker.slack.sum())
    ctx.trace.append({"level": level, "kind": "dd-block-split", "n": m.n,
                      "s_edges": sp.s, "epsilon_r": sp.epsilon_r,
                      "delta_level": sp.delta})
    return math.log(d_x) + _det_rec(h, level + 1, ctx)


def _det_rec(g: WeightedGraph, level: int, ctx: _Ctx) -> float:
    if g.n <= ctx.config.base_cap:
        ctx.trace.append({"level": level, "kind": "exact-base", "n": g.n})
        return exact_log_det_plus(g, cap=ctx.config.base_cap)
    if level > ctx.depth_guard:
        raise ConvergenceError(
            f"recursion exceeded the depth guard {ctx.depth_guard}; "
            f"subset extraction is not shrinking the graph")

    nu2 = _measure_gap(g, ctx)
    subset = find_dd_subset(g, ctx.config.alpha,
                            rng=stream(ctx.seed, 0x5B, ctx.next_id()))
    rest = np.setdiff1d(np.arange(g.n), subset)
    if subset.size == 0 or rest.size == 0:
        raise ConvergenceError(f"degenerate split at level {level} (|S|={subset.size})")

    log_left = _log_det_dd_block(g, subset, level, ctx)

    remainder = schur_complement(g, rest)
    if remainder.n <= ctx.config.base_cap:
        ctx.trace.append({"level": level, "kind": "remainder-exact", "n": remainder.n})
        log_right = exact_log_det_plus(remainder, cap=ctx.config.base_cap)
    else:
        sp = SparsifyParams.from_target(remainder.n, ctx.delta_level)
        params = compute_params(g.n, g.weight_ratio(), sp.epsilon_r, nu2,
                                c_t0=ctx.config.sketch_c_t0, c_s=ctx.config.sketch_c_s)
        sk = build_sketch(g, params, seed=derive_key(ctx.seed, 0xB2, ctx.next_id()),
                          workers=ctx.config.workers)
        # resistances between surviving vertices are unchanged by the
        # elimination, so query the sketch of g at the original ids
        pairs = np.column_stack([rest[remainder.edge_u], rest[remainder.edge_v]])
        r_est = query_batch(sk, pairs)
        h = _sparsify_connected(remainder, r_est, sp, ctx, 0xA2)
        ctx.trace.append({"level": level, "kind": "remainder-split", "n": remainder.n,
                          "s_edges": sp.s, "epsilon_r": sp.epsilon_r,
                          "delta_level": sp.delta, "nu2": nu2,
                          "subset_size": int(subset.size)})
        log_right = _det_rec(h, level + 1, ctx)

    return log_left + log_right


def _estimated_depth(n: int, base_cap: int) -> int:
    if n <= base_cap:
        return 1
    # the remainder keeps at most 7/8 of the vertices per level
    return max(1, math.ceil(math.log(n / base_cap) / math.log(8.0 / 7.0)))


def det_approx(g: WeightedGraph, delta: float, seed: int,
               config: DetConfig = DetConfig()) -> LogDetEstimate:
    """Estimate the log spanning-tree determinant of a connected graph
    to additive error ``log(1 + delta)``, with high probability, using
    walk sketches instead of dense algebra above the base size.

    Raises
    ------
    ValidationError
        Disconnected input (the determinant is zero) or bad parameters.
    ConvergenceError
        Non-expander inputs (gap floor), degenerate splits, or repeated
        disconnecting sparsifications.
    """
    if not (0.0 < delta <= 1.0):
        raise ValidationError(f"delta must be in (0, 1], got {delta}")
    if seed < 0:
        raise ValidationError(f"seed must be non-negative, got {seed}")
    if g.n < 1:
        raise ValidationError("graph must have at least one vertex")
    if not is_connected(g):
        raise ValidationError(
            "graph is disconnected: it has no spanning trees and log det+ is -inf")

    delta_level = delta / (config.split_constant * _estimated_depth(g.n, config.base_cap))
    ctx = _Ctx(seed=seed, config=config, delta_level=delta_level,
               depth_guard=math.ceil(4 * math.log2(max(g.n, 2))), trace=[])
    log_value = _det_rec(g, 0, ctx)
    return LogDetEstimate(log_value=log_value, n=g.n, delta=delta, seed=seed,
                          delta_budget_spent=ctx.spent, trace=ctx.trace)


def dd_det_approx(m: DDMatrix, delta: float, seed: int, alpha: float | None = None,
                  config: DetConfig = DetConfig()) -> LogDetEstimate:
    """Estimate ``log det M`` for a strictly diagonally dominant ``M``
    through its Laplacian completion.

    ``alpha`` defaults to the matrix's own certified dominance margin
    (clamped into the config's working range).
    """
    if not (0.0 < delta <= 1.0):
        raise ValidationError(f"delta must be in (0, 1], got {delta}")
    if alpha is None:
        alpha = certified_alpha(m)
        if not math.isfinite(alpha):
            alpha = 1e6
    if alpha <= 0:
        raise ValidationError(
            f"matrix is not strictly dominant (alpha={alpha:g}); det may vanish")
    validate_dd(m, alpha)

    if m.n <= config.base_cap:
        est = LogDetEstimate(log_value=_log_det_dense_pd(m.values, "DD matrix"),
                             n=m.n, delta=delta, seed=seed)
        est.trace.append({"level": 0, "kind": "dd-exact", "n": m.n})
        return est

    delta_level = delta / (config.split_constant * _estimated_depth(m.n, config.base_cap))
    ctx = _Ctx(seed=seed, config=config, delta_level=delta_level,
               depth_guard=math.ceil(4 * math.log2(max(m.n, 2))), trace=[])

    sp = SparsifyParams.from_target(m.n, delta_level)
    sk, walker = dd_effective_resistance_sketch(
        m, alpha, sp.epsilon_r, seed=derive_key(seed, 0xD0, ctx.next_id()),
        c_t0=config.sketch_c_t0, c_s=config.sketch_c_s, workers=config.workers)
    eliminated = walker.to_explicit_graph()
    pairs = np.column_stack([eliminated.edge_u, eliminated.edge_v])
    r_est = query_batch(sk, pairs)
    h = _sparsify_connected(eliminated, r_est, sp, ctx, 0xA1)
    d_x = float(walker.slack.sum())
    ctx.trace.append({"level": 0, "kind": "dd-split", "n": m.n, "s_edges": sp.s,
                      "epsilon_r": sp.epsilon_r, "delta_level": sp.delta})
    log_value = math.log(d_x) + _det_rec(h, 1, ctx)
    return LogDetEstimate(log_value=log_value, n=m.n, delta=delta, seed=seed,
                          delta_budget_spent=ctx.spent, trace=ctx.trace)
