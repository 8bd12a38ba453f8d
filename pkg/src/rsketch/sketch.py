"""Sparse visit-excess sketches and constant-time resistance queries.

For every start vertex ``u`` the builder runs, for each repetition
``i < s`` and each length ``l < t0``, an independent length-``l`` lazy
walk and counts endpoints.  Averaging, subtracting the stationary mass
and halving yields an estimate of ``u``'s cumulative visit-excess
vector; entries with absolute value at or below ``epsilon/4`` are
dropped.  The effective resistance between ``u`` and ``v`` is then read
off two stored vectors with four dictionary lookups:

    R(u, v)  ~  x_u[u]/d_u - x_u[v]/d_v + x_v[v]/d_v - x_v[u]/d_u

clamped from below by the degree floor ``(1/d_u + 1/d_v) / 2``, which no
resistance in any graph can undercut.

Parameter choice: with spectral gap ``nu2`` of the normalized Laplacian
and weight spread ``W``,

    t0 = ceil(c_t0 * ln(n W / (epsilon nu2)) / nu2)
    s  = ceil(c_s * t0 * ln(n) / epsilon^2)

The default constants (``c_t0=2``, ``c_s=4``) are sized for (1+epsilon)
accuracy with comfortable margin on expanders; callers embedding
sketches in larger pipelines may trade margin for speed by lowering
them.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .alias import build_alias
from .errors import ConvergenceError, ValidationError
from .graphs import WeightedGraph
from .walks import SchurWalker, stationary_distribution

__all__ = [
    "SketchParams",
    "ResistanceSketch",
    "compute_params",
    "build_sketch",
    "build_sketch_implicit",
    "query",
    "query_batch",
    "estimate_spectral_gap",
]

_CHUNK = 32  # vertices per kernel invocation; has no effect on output values


# =============================================================================
# Parameters
# =============================================================================


@dataclass(frozen=True)
class SketchParams:
    """Resolved sketch parameters.

    ``t0`` is the walk-length horizon, ``s`` the number of repetitions
    per (vertex, length) pair, ``threshold`` the sparsification cutoff
    applied to estimated excess values.
    """

    epsilon: float
    nu2: float
    t0: int
    s: int
    threshold: float
    c_t0: float = 2.0
    c_s: float = 4.0

    def __post_init__(self):
        if not (0.0 < self.epsilon <= 2.0):
            raise ValidationError(f"epsilon must be in (0, 2], got {self.epsilon}")
        if not (0.0 < self.nu2 <= 2.0):
            raise ValidationError(f"nu2 must be in (0, 2], got {self.nu2}")
        if self.t0 < 1 or self.s < 1:
            raise ValidationError(f"t0 and s must be >= 1, got t0={self.t0}, s={self.s}")
        if self.threshold < 0:
            raise ValidationError(f"threshold must be >= 0, got {self.threshold}")


def compute_params(n: int, weight_ratio: float, epsilon: float, nu2: float,
                   c_t0: float = 2.0, c_s: float = 4.0) -> SketchParams:
    """Resolve ``(t0, s, threshold)`` from graph size, weight spread,
    target accuracy and spectral gap."""
    if n < 2:
        raise ValidationError(f"need at least 2 vertices, got n={n}")
    if weight_ratio < 1.0:
        raise ValidationError(f"weight ratio is max/min and must be >= 1, got {weight_ratio}")
    if not (0.0 < epsilon <= 2.0):
        raise ValidationError(f"epsilon must be in (0, 2], got {epsilon}")
    if not (0.0 < nu2 <= 2.0):
        raise ValidationError(f"nu2 must be in (0, 2], got {nu2}")
    if c_t0 <= 0 or c_s <= 0:
        raise ValidationError(f"constants must be positive, got c_t0={c_t0}, c_s={c_s}")
    t0 = max(1, math.ceil(c_t0 * math.log(n * weight_ratio / (epsilon * nu2)) / nu2))
    s = max(1, math.ceil(c_s * t0 * math.log(n) / epsilon**2))
    return SketchParams(epsilon=epsilon, nu2=nu2, t0=t0, s=s,
                        threshold=epsilon / 4.0, c_t0=c_t0, c_s=c_s)


# =============================================================================
# Sketch container and queries
# =============================================================================


@dataclass
class ResistanceSketch:
    """Per-vertex sparse visit-excess vectors plus degrees.

    ``entry_vertices[u]`` / ``entry_values[u]`` hold vertex ids
    (ascending) and excess estimates for start vertex ``u``.  Lookup
    dictionaries are materialized once for O(1) queries.
    """

    n: int
    params: SketchParams
    seed: int
    degrees: np.ndarray
    entry_vertices: list[np.ndarray]
    entry_values: list[np.ndarray]
    _maps: list[dict[int, float]] = field(default_factory=list, repr=False)

    def __post_init__(self):
        if not self._maps:
            self._maps = [
                dict(zip(idx.tolist(), val.tolist()))
                for idx, val in zip(self.entry_vertices, self.entry_values)
            ]

    def entry_count(self) -> int:
        """Total stored entries across all vertices."""
        return int(sum(len(v) for v in self.entry_vertices))

    def excess(self, u: int, v: int) -> float:
        """Stored excess estimate ``x_u[v]`` (0.0 if dropped)."""
        return self._maps[u].get(v, 0.0)


def query(sketch: ResistanceSketch, u: int, v: int) -> float:
    """Approximate effective resistance between ``u`` and ``v``.

    Four dictionary lookups and a degree-floor clamp; cost independent
    of graph size.
    """
    n = sketch.n
    if not (0 <= u < n and 0 <= v < n):
        raise ValidationError(f"vertex pair ({u}, {v}) out of range [0, {n})")
    if u == v:
        return 0.0
    mu = sketch._maps[u]
    mv = sketch._maps[v]
    du = sketch.degrees[u]
    dv = sketch.degrees[v]
    est = (mu.get(u, 0.0) / du - mu.get(v, 0.0) / dv
           + mv.get(v, 0.0) / dv - mv.get(u, 0.0) / du)
    floor = 0.5 * (1.0 / du + 1.0 / dv)
    return float(max(est, floor))


def query_batch(sketch: ResistanceSketch, pairs: np.ndarray) -> np.ndarray:
    """Vectorized :func:`query` over an ``(k, 2)`` array of pairs."""
    pairs = np.asarray(pairs, dtype=np.int64)
    if pairs.ndim != 2 or pairs.shape[1] != 2:
        raise ValidationError(f"pairs must have shape (k, 2), got {pairs.shape}")
    out = np.empty(pairs.shape[0], dtype=np.float64)
    for i, (u, v) in enumerate(pairs):
        out[i] = query(sketch, int(u), int(v))
    return out


# =============================================================================
# Builders
# =============================================================================


def _assemble(counts: np.ndarray, s: int, t0: int, pi: np.ndarray,
              threshold: float) -> tuple[list[np.ndarray], list[np.ndarray]]:
    """Counts -> thresholded sparse excess rows."""
    excess = 0.5 * (counts / float(s) - float(t0) * pi[np.newaxis, :])
    idx_rows: list[np.ndarray] = []
    val_rows: list[np.ndarray] = []
    for row in excess:
        idx = np.flatnonzero(np.abs(row) > threshold)
        idx_rows.append(idx.astype(np.int64))
        val_rows.append(row[idx].copy())
    return idx_rows, val_rows


def _run_chunks(n: int, workers: int, run_chunk) -> tuple[list[np.ndarray], list[np.ndarray]]:
    """Execute per-chunk builds (optionally on a thread pool; the kernels
    drop the GIL).  Output order is by vertex id, never by completion."""
    starts = list(range(0, n, _CHUNK))
    if workers <= 1:
        results = [run_chunk(s0) for s0 in starts]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run_chunk, starts))
    idx_rows: list[np.ndarray] = []
    val_rows: list[np.ndarray] = []
    for ir, vr in results:
        idx_rows.extend(ir)
        val_rows.extend(vr)
    return idx_rows, val_rows


def build_sketch(g: WeightedGraph, params: SketchParams, seed: int,
                 workers: int = 1) -> ResistanceSketch:
    """Build the sketch for every vertex of an explicit graph.

    Deterministic in ``(g, params, seed)``; the ``workers`` count only
    changes wall time.
    """
    if g.n < 2:
        raise ValidationError("sketch requires at least 2 vertices")
    if np.any(g.degrees <= 0):
        dead = int(np.flatnonzero(g.degrees <= 0)[0])
        raise ValidationError(f"vertex {dead} is isolated; the walk is undefined")
    if seed < 0:
        raise ValidationError(f"seed must be non-negative, got {seed}")

    sampler = build_alias(g)
    j0deg = _kernels.pack_row_offsets(g.indptr)
    thr32 = _kernels.quantize_thresholds(sampler.prob)
    uniform = bool(np.all(sampler.prob == 1.0))
    pi = stationary_distribution(g)
    seed_u64 = np.uint64(seed & 0xFFFF_FFFF_FFFF_FFFF)  # derived seeds use all 64 bits

    def run_chunk(s0: int):
        s1 = min(s0 + _CHUNK, g.n)
        counts = np.zeros((s1 - s0, g.n), dtype=np.int64)
        _kernels.sketch_counts(j0deg, g.nbrs, thr32, sampler.alias, uniform,
                               params.s, params.t0, seed_u64, s0, s1, counts)
        return _assemble(counts, params.s, params.t0, pi, params.threshold)

    idx_rows, val_rows = _run_chunks(g.n, workers, run_chunk)
    return ResistanceSketch(n=g.n, params=params, seed=seed,
                            degrees=g.degrees.copy(),
                            entry_vertices=idx_rows, entry_values=val_rows)


def build_sketch_implicit(walker: SchurWalker, params: SketchParams, seed: int,
                          workers: int = 1) -> ResistanceSketch:
    """Build the sketch of a single-vertex Schur complement without
    materializing it, using the implicit walker.

    Degrees (and the stationary distribution) are the eliminated graph's
    ``new_degrees``, so queries against this sketch approximate
    resistances of the eliminated graph — equivalently, of the original
    matrix the completion came from.
    """
    if seed < 0:
        raise ValidationError(f"seed must be non-negative, got {seed}")
    base = walker.base
    j0deg = _kernels.pack_row_offsets(base.indptr)
    thr32 = _kernels.quantize_thresholds(walker.base_sampler.prob)
    pbase64 = _kernels.quantize_branch_probability(walker.base_prob)
    cthr32 = _kernels.quantize_thresholds(walker.clique_prob)
    pi = walker.stationary()
    seed_u64 = np.uint64(seed & 0xFFFF_FFFF_FFFF_FFFF)  # derived seeds use all 64 bits

    def run_chunk(s0: int):
        s1 = min(s0 + _CHUNK, walker.n)
        counts = np.zeros((s1 - s0, walker.n), dtype=np.int64)
        _kernels.schur_sketch_counts(j0deg, base.nbrs, thr32, walker.base_sampler.alias,
                                     pbase64, cthr32, walker.clique_alias,
                                     params.s, params.t0, seed_u64, s0, s1, counts)
        return _assemble(counts, params.s, params.t0, pi, params.threshold)

    idx_rows, val_rows = _run_chunks(walker.n, workers, run_chunk)
    return ResistanceSketch(n=walker.n, params=params, seed=seed,
                            degrees=walker.new_degrees.copy(),
                            entry_vertices=idx_rows, entry_values=val_rows)


# =============================================================================
# Spectral gap estimation
# =============================================================================


def estimate_spectral_gap(g: WeightedGraph, tol: float = 0.01, seed: int = 0,
                          max_iters: int = 20000) -> float:
    """Second-smallest eigenvalue of the normalized Laplacian, by power
    iteration on ``I - N/2`` with the known top eigenvector deflated.

    The returned value carries a residual-certified relative error of
    about ``tol``; it is meant to parameterize sketches, where mild
    misestimates only shift constants.

    Raises
    ------
    ConvergenceError
        If the iteration budget is exhausted before the residual
        certifies the requested tolerance.
    """
    if np.any(g.degrees <= 0):
        raise ValidationError("spectral gap undefined with isolated vertices")
    if not (0 < tol < 1):
        raise ValidationError(f"tol must be in (0, 1), got {tol}")

    inv_sqrt_d = 1.0 / np.sqrt(g.degrees)
    eu, ev, ew = g.edge_u, g.edge_v, g.edge_w

    def apply_b(x: np.ndarray) -> np.ndarray:
        # B = I - N/2 = (I + D^{-1/2} A D^{-1/2}) / 2
        z = x * inv_sqrt_d
        y = np.zeros_like(x)
        np.add.at(y, eu, ew * z[ev])
        np.add.at(y, ev, ew * z[eu])
        return 0.5 * (x + y * inv_sqrt_d)

    phi = np.sqrt(g.degrees)
    phi /= np.linalg.norm(phi)

    from .rngutil import stream
    x = stream(seed, 0x9A1).standard_normal(g.n)
    x -= (phi @ x) * phi
    nx = np.linalg.norm(x)
    if nx == 0.0:
        x = np.ones(g.n)
        x[0] = -1.0
        x -= (phi @ x) * phi
        nx = np.linalg.norm(x)
    x /= nx

    rayleigh = 0.0
    for it in range(1, max_iters + 1):
        y = apply_b(x)
        y -= (phi @ y) * phi
        rayleigh = float(x @ y)
        resid = float(np.linalg.norm(y - rayleigh * x))
        gap_est = 2.0 * (1.0 - rayleigh)
        if 2.0 * resid <= tol * max(gap_est, 1e-300):
            return float(min(max(gap_est, 0.0), 2.0))
        ny = np.linalg.norm(y)
        if ny <= 1e-14:
            # deflated operator is (numerically) zero: gap is exactly 2
            return 2.0
        x = y / ny
    raise ConvergenceError(
        f"spectral gap estimate did not reach tol={tol} in {max_iters} iterations",
        iterations=max_iters, residual=resid)
