"""Sparse visit-excess sketches for effective resistances and tree counts.

The package builds, for every vertex of a well-connected weighted graph, a
small dictionary summarizing how much more often lazy random walks started
there visit each vertex compared to stationarity.  Two such dictionaries
answer an effective-resistance query in O(1) lookups, and a recursive
block-elimination scheme turns batched queries into multiplicative
approximations of spanning-tree counts and SDD determinants.
"""

from .alias import AliasSampler, build_alias, sample_neighbor, sample_neighbor_batch
from .ddmatrix import (
    DDMatrix,
    LaplacianCompletion,
    certified_alpha,
    complete_to_laplacian,
    dd_effective_resistance_sketch,
    find_dd_subset,
    validate_dd,
)
from .determinant import (
    DetConfig,
    LogDetEstimate,
    SparsifyParams,
    dd_det_approx,
    det_approx,
    det_sparsify,
    exact_log_det_plus,
)
from .errors import CapabilityError, ConvergenceError, ValidationError
from .graphs import (
    GraphGeneratorSpec,
    WeightedGraph,
    build_graph,
    from_dense_weights,
    generate,
    is_connected,
    schur_complement,
    schur_complement_eliminate_vertex,
    vertex_set,
)
from .oracle import (
    exact_effective_resistance,
    exact_effective_resistance_matrix,
    exact_spectrum_normalized,
    exact_visit_excess,
    exact_walk_distribution,
    lazy_walk_matrix,
    matrix_tree_log_count,
)
from .sketch import (
    ResistanceSketch,
    SketchParams,
    build_sketch,
    build_sketch_implicit,
    compute_params,
    estimate_spectral_gap,
    query,
    query_batch,
)
from .walks import (
    LazyWalkConfig,
    SchurWalker,
    lazy_step,
    schur_lazy_step,
    stationary_distribution,
    walk_endpoint,
)

__version__ = "0.1.0"

__all__ = [
    "AliasSampler",
    "build_alias",
    "sample_neighbor",
    "sample_neighbor_batch",
    "DDMatrix",
    "LaplacianCompletion",
    "certified_alpha",
    "complete_to_laplacian",
    "dd_effective_resistance_sketch",
    "find_dd_subset",
    "validate_dd",
    "DetConfig",
    "LogDetEstimate",
    "SparsifyParams",
    "dd_det_approx",
    "det_approx",
    "det_sparsify",
    "exact_log_det_plus",
    "CapabilityError",
    "ConvergenceError",
    "ValidationError",
    "GraphGeneratorSpec",
    "WeightedGraph",
    "build_graph",
    "from_dense_weights",
    "generate",
    "is_connected",
    "schur_complement",
    "schur_complement_eliminate_vertex",
    "vertex_set",
    "exact_effective_resistance",
    "exact_effective_resistance_matrix",
    "exact_spectrum_normalized",
    "exact_visit_excess",
    "exact_walk_distribution",
    "lazy_walk_matrix",
    "matrix_tree_log_count",
    "ResistanceSketch",
    "SketchParams",
    "build_sketch",
    "build_sketch_implicit",
    "compute_params",
    "estimate_spectral_gap",
    "query",
    "query_batch",
    "LazyWalkConfig",
    "SchurWalker",
    "lazy_step",
    "schur_lazy_step",
    "stationary_distribution",
    "walk_endpoint",
    "__version__",
]
