"""Coloring engine and verification lab for nearly disjoint graph unions."""

from .instance import (
    CorrespondenceAssignment,
    ListAssignment,
    MemberGraph,
    PartialColoring,
    UnionInstance,
    build_union_graph,
    color_degree,
    identity_matchings,
    load_instance_document,
    max_color_degree,
    pad_membership,
    prune_edges,
    validate,
    verify_coloring,
)
from .schedule import (
    NibbleParams,
    Schedule,
    build_schedule,
    check_prop22,
    keep_value,
    uncov_value,
)
from .nibble import (
    NibbleOutcome,
    RoundSample,
    RoundStats,
    check_bad_events,
    compute_removed_lists,
    compute_X,
    measure_stats,
    nibble_round,
    sample_round,
)
from .finisher import FinisherConfig, FinishResult, finish, resample_pass
from .normalizer import build_regularizer, normalize, pad_lists
from .lab import (
    block_design_instance,
    check_bound_15i,
    construct_thm15ii,
    exact_expectations,
    exhaustive_list_chromatic,
    monte_carlo,
    random_linear_hypergraph,
)
from .pipeline import edge_color_hypergraph, line_graph_union, run_pipeline

__version__ = "0.1.0"

__all__ = [
    "CorrespondenceAssignment",
    "ListAssignment",
    "MemberGraph",
    "PartialColoring",
    "UnionInstance",
    "build_union_graph",
    "color_degree",
    "identity_matchings",
    "load_instance_document",
    "max_color_degree",
    "pad_membership",
    "prune_edges",
    "validate",
    "verify_coloring",
    "NibbleParams",
    "Schedule",
    "build_schedule",
    "check_prop22",
    "keep_value",
    "uncov_value",
    "NibbleOutcome",
    "RoundSample",
    "RoundStats",
    "check_bad_events",
    "compute_removed_lists",
    "compute_X",
    "measure_stats",
    "nibble_round",
    "sample_round",
    "FinisherConfig",
    "FinishResult",
    "finish",
    "resample_pass",
    "build_regularizer",
    "normalize",
    "pad_lists",
    "block_design_instance",
    "check_bound_15i",
    "construct_thm15ii",
    "exact_expectations",
    "exhaustive_list_chromatic",
    "monte_carlo",
    "random_linear_hypergraph",
    "edge_color_hypergraph",
    "line_graph_union",
    "run_pipeline",
    "__version__",
]
