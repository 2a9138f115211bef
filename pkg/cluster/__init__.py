"""
Polymer Gas Cluster Expansion

Ursell coefficients and Mayer series of abstract polymer gases with hard-core
and soft pair potentials, the tree-graph identity and bound, the convergence
criterion with its weight search, and the long-range BEG worked example.
"""

from .errors import (
    BracketError,
    CapacityError,
    ClusterError,
    ModelFileError,
    PreconditionError,
    QuadratureError,
    TreeIdentityError,
)
from .graphs import (
    LabeledGraph,
    LabeledTree,
    PlanarRootedTree,
    enumerate_connected_graphs,
    enumerate_planar_rooted,
    enumerate_trees,
    preimage_count,
    to_planar_rooted,
)
from .model import (
    INF,
    DensePairTable,
    ExtendedReal,
    PairTable,
    PolymerSpace,
    StabilityReport,
    WeightAssignment,
    verify_stability,
)
from .expansion import (
    PartitionResult,
    SeriesTruncation,
    UrsellEvaluator,
    Volume,
    abs_log_xi,
    mayer_log_xi,
    partition_function,
    pinned_sum,
    ursell,
    ursell_from_matrix,
)
from .treebound import (
    CutoffPotential,
    InterpolationChain,
    TreeGraphResult,
    convex_decomposition_K,
    cutoff_H0,
    enumerate_chains,
    measure_mass,
    tree_graph_rhs,
    tree_kernel_sum,
    ursell_tree_bound,
)
from .criterion import (
    CertifiedBound,
    CriterionReport,
    IterationTrace,
    KoteckyPreissReport,
    MuSearchResult,
    certified_pinned_bound,
    check_criterion,
    iterate_tree_series,
    kotecky_preiss,
    labeled_tree_pinned_sum,
    optimize_mu,
    planar_tree_sum,
)
from .beg import (
    BegParams,
    BegPolymer,
    Beta0Result,
    BijectionReport,
    EnvelopeReport,
    LatticePairTable,
    Window,
    beta0,
    build_polymer_space,
    convergence_envelope,
    convergence_threshold,
    enumerate_polymers,
    interaction_W,
    j2_constant,
    jbeta,
    lattice_animal_counts,
    spin_polymer_bijection_check,
    surface_count,
    window_polymer_space,
)

__all__ = [
    "BracketError",
    "CapacityError",
    "ClusterError",
    "ModelFileError",
    "PreconditionError",
    "QuadratureError",
    "TreeIdentityError",
    "LabeledGraph",
    "LabeledTree",
    "PlanarRootedTree",
    "enumerate_connected_graphs",
    "enumerate_planar_rooted",
    "enumerate_trees",
    "preimage_count",
    "to_planar_rooted",
    "INF",
    "DensePairTable",
    "ExtendedReal",
    "PairTable",
    "PolymerSpace",
    "StabilityReport",
    "WeightAssignment",
    "verify_stability",
    "PartitionResult",
    "SeriesTruncation",
    "UrsellEvaluator",
    "Volume",
    "abs_log_xi",
    "mayer_log_xi",
    "partition_function",
    "pinned_sum",
    "ursell",
    "ursell_from_matrix",
    "CutoffPotential",
    "InterpolationChain",
    "TreeGraphResult",
    "convex_decomposition_K",
    "cutoff_H0",
    "enumerate_chains",
    "measure_mass",
    "tree_graph_rhs",
    "tree_kernel_sum",
    "ursell_tree_bound",
    "CertifiedBound",
    "CriterionReport",
    "IterationTrace",
    "KoteckyPreissReport",
    "MuSearchResult",
    "certified_pinned_bound",
    "check_criterion",
    "iterate_tree_series",
    "kotecky_preiss",
    "labeled_tree_pinned_sum",
    "optimize_mu",
    "planar_tree_sum",
    "BegParams",
    "BegPolymer",
    "Beta0Result",
    "BijectionReport",
    "EnvelopeReport",
    "LatticePairTable",
    "Window",
    "beta0",
    "build_polymer_space",
    "convergence_envelope",
    "convergence_threshold",
    "enumerate_polymers",
    "interaction_W",
    "j2_constant",
    "jbeta",
    "lattice_animal_counts",
    "spin_polymer_bijection_check",
    "surface_count",
    "window_polymer_space",
]
