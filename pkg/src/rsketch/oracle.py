"""Dense linear-algebra ground truth for small graphs.

Everything here is O(n^2) memory / O(n^3) time and exists to verify the
sampling-based estimators: exact effective resistances, exact cumulative
visit-excess vectors of the lazy walk, exact normalized spectra, exact
log spanning-tree counts, and exact walk distributions.

All entry points enforce a hard size cap (:data:`ORACLE_MAX_N`); beyond
it they raise :class:`~rsketch.errors.CapabilityError` rather than
silently taking hours.
"""

from __future__ import annotations

import numpy as np

from .errors import CapabilityError, ValidationError
from .graphs import WeightedGraph, is_connected

__all__ = [
    "ORACLE_MAX_N",
    "lazy_walk_matrix",
    "exact_walk_distribution",
    "exact_visit_excess",
    "exact_effective_resistance",
    "exact_effective_resistance_matrix",
    "exact_spectrum_normalized",
    "matrix_tree_log_count",
]

ORACLE_MAX_N = 2048

# Relative disagreement between independent solve paths that we treat as
# an internal inconsistency rather than ordinary float noise.
_CROSS_CHECK_RTOL = 1e-10


def _check_size(g: WeightedGraph, op: str) -> None:
    if g.n > ORACLE_MAX_N:
        raise CapabilityError(
            f"{op}: dense oracle supports n <= {ORACLE_MAX_N}, got n={g.n}")


# =============================================================================
# Walk operator
# =============================================================================


def lazy_walk_matrix(g: WeightedGraph) -> np.ndarray:
    """Dense one-step operator of the half-lazy walk.

    Column ``u`` is the distribution after one step from ``u``: stay put
    with probability 1/2, otherwise move to a neighbour with probability
    proportional to the edge weight.
    """
    _check_size(g, "lazy_walk_matrix")
    if np.any(g.degrees <= 0):
        raise ValidationError("graph has an isolated vertex; walk is undefined")
    a = g.adjacency_dense()
    return 0.5 * np.eye(g.n) + 0.5 * (a / g.degrees[np.newaxis, :])


def exact_walk_distribution(g: WeightedGraph, u: int, t: int) -> np.ndarray:
    """Distribution of the lazy walk after exactly ``t`` steps from ``u``."""
    _check_size(g, "exact_walk_distribution")
    if not 0 <= u < g.n:
        raise ValidationError(f"vertex {u} out of range [0, {g.n})")
    if t < 0:
        raise ValidationError(f"step count must be non-negative, got {t}")
    x = lazy_walk_matrix(g)
    p = np.zeros(g.n)
    p[u] = 1.0
    for _ in range(t):
        p = x @ p
    return p


def exact_visit_excess(g: WeightedGraph, u: int, t_max: int | None = None) -> np.ndarray:
    """Exact cumulative visit-excess vector for start vertex ``u``.

    Half the sum over steps of (walk distribution at step t) minus the
    stationary distribution.  With ``t_max=None`` the infinite sum is
    evaluated in closed form through the fundamental matrix
    ``(I - X + pi 1^T)^{-1}``; otherwise the partial sum over
    ``t = 0..t_max-1`` is accumulated directly.
    """
    _check_size(g, "exact_visit_excess")
    if not 0 <= u < g.n:
        raise ValidationError(f"vertex {u} out of range [0, {g.n})")
    if t_max is None and not is_connected(g):
        raise ValidationError("infinite-horizon excess requires a connected graph")
    x = lazy_walk_matrix(g)
    pi = g.degrees / g.degrees.sum()
    if t_max is None:
        z = np.linalg.inv(np.eye(g.n) - x + np.outer(pi, np.ones(g.n)))
        return 0.5 * (z[:, u] - pi)
    acc = np.zeros(g.n)
    p = np.zeros(g.n)
    p[u] = 1.0
    for _ in range(int(t_max)):
        acc += p - pi
        p = x @ p
    return 0.5 * acc


# =============================================================================
# Effective resistance
# =============================================================================


def _laplacian(g: WeightedGraph) -> np.ndarray:
    if g.n < 2:
        raise ValidationError("resistance requires at least 2 vertices")
    if not is_connected(g):
        raise ValidationError("graph is disconnected; resistances are infinite across components")
    return g.laplacian_dense()


def _resistance_via_grounded_solve(lap: np.ndarray, u: int, v: int) -> float:
    # Ground v (fix its potential to 0), push one unit of current into u;
    # the potential at u is then exactly the effective resistance.
    n = lap.shape[0]
    keep = [i for i in range(n) if i != v]
    pos = {w: i for i, w in enumerate(keep)}
    rhs = np.zeros(n - 1)
    rhs[pos[u]] = 1.0
    y = np.linalg.solve(lap[np.ix_(keep, keep)], rhs)
    return float(y[pos[u]])


def exact_effective_resistance(g: WeightedGraph, u: int, v: int) -> float:
    """Effective resistance between ``u`` and ``v``, computed along two
    independent dense paths (pseudoinverse quadratic form and a grounded
    linear solve) that must agree to ~1e-10 relative.
    """
    _check_size(g, "exact_effective_resistance")
    for w in (u, v):
        if not 0 <= w < g.n:
            raise ValidationError(f"vertex {w} out of range [0, {g.n})")
    if u == v:
        return 0.0
    lap = _laplacian(g)
    pinv = np.linalg.pinv(lap)
    r_pinv = float(pinv[u, u] + pinv[v, v] - 2.0 * pinv[u, v])
    r_solve = _resistance_via_grounded_solve(lap, u, v)
    if abs(r_pinv - r_solve) > _CROSS_CHECK_RTOL * max(1.0, abs(r_pinv)):
        raise ValidationError(
            f"resistance oracle self-check failed for pair ({u}, {v}): "
            f"pinv path {r_pinv!r} vs solve path {r_solve!r}")
    return r_pinv


def exact_effective_resistance_matrix(g: WeightedGraph) -> np.ndarray:
    """All-pairs effective resistance matrix.

    Uses one pseudoinverse; a deterministic handful of pairs is
    re-verified through the independent grounded-solve path.
    """
    _check_size(g, "exact_effective_resistance_matrix")
    lap = _laplacian(g)
    pinv = np.linalg.pinv(lap)
    d = np.diag(pinv)
    r = d[:, np.newaxis] + d[np.newaxis, :] - 2.0 * pinv
    np.fill_diagonal(r, 0.0)

    probe = [(0, g.n - 1), (0, g.n // 2), (g.n // 3, 2 * g.n // 3)]
    for u, v in probe:
        if u == v:
            continue
        r_solve = _resistance_via_grounded_solve(lap, u, v)
        if abs(r[u, v] - r_solve) > _CROSS_CHECK_RTOL * max(1.0, abs(r_solve)):
            raise ValidationError(
                f"resistance oracle self-check failed for pair ({u}, {v}): "
                f"pinv path {r[u, v]!r} vs solve path {r_solve!r}")
    return r


# =============================================================================
# Spectra and spanning trees
# =============================================================================


def exact_spectrum_normalized(g: WeightedGraph) -> np.ndarray:
    """Ascending eigenvalues of the degree-normalized Laplacian
    ``I - D^{-1/2} A D^{-1/2}``.

    For a connected graph the first eigenvalue is 0 (up to float noise)
    and the second one is the spectral gap used throughout the package.
    """
    _check_size(g, "exact_spectrum_normalized")
    if np.any(g.degrees <= 0):
        raise ValidationError("normalized spectrum undefined with isolated vertices")
    inv_sqrt_d = 1.0 / np.sqrt(g.degrees)
    norm_lap = -g.adjacency_dense() * np.outer(inv_sqrt_d, inv_sqrt_d)
    norm_lap[np.diag_indices(g.n)] = 1.0
    return np.linalg.eigvalsh(norm_lap)


def matrix_tree_log_count(g: WeightedGraph) -> float:
    """Natural log of the weighted spanning-tree count.

    Computed as the log-determinant of the Laplacian with row/column 0
    removed, and cross-checked against the spectral identity
    (sum of log nonzero Laplacian eigenvalues) - log n.
    """
    _check_size(g, "matrix_tree_log_count")
    if g.n == 1:
        return 0.0  # the empty tree
    lap = _laplacian(g)
    sign, logdet = np.linalg.slogdet(lap[1:, 1:])
    if sign <= 0:
        raise ValidationError(
            f"tree-count cofactor has non-positive sign {sign}; graph is not usable")

    eigvals = np.linalg.eigvalsh(lap)
    if eigvals[1] <= 0:
        raise ValidationError("Laplacian has a repeated zero eigenvalue (disconnected graph)")
    via_spectrum = float(np.log(eigvals[1:]).sum() - np.log(g.n))
    if abs(logdet - via_spectrum) > 1e-8 * max(1.0, abs(logdet)):
        raise ValidationError(
            f"tree-count self-check failed: cofactor {logdet!r} vs spectrum {via_spectrum!r}")
    return float(logdet)
