"""Deterministic generation of random-graph families with persistent
community semantics, plus validation metrics, dataset persistence, a batch
CLI and a local exploration service."""

from .core import (
    RNG_ALGORITHM,
    ConfigError,
    FamilyConfig,
    GraphInstance,
    GraphParams,
    ScaledMatrixDerivation,
    Universe,
    UniverseConfig,
    UnsatisfiableHomophilyError,
    rng_for_graph,
    sample_pareto,
    sample_truncated_gaussian,
)
from .dataset import Dataset, read_dataset, write_dataset
from .sampler import (
    FamilyGenerationError,
    assign_degree_factors,
    assign_nodes,
    derive_shifted_family,
    generate_edges,
    generate_family,
    generate_graph,
    repair_connectivity,
    sample_graph_params,
    scale_probability_matrix,
    select_communities,
)
from .sensitivity import SensitivityConfig, SensitivityResult, run_sensitivity
from .tasks import community_labels, make_node_splits, make_splits, triangle_count
from .universe import build_universe, sample_node_features
from .validation import ValidationReport, validate_family

__all__ = [
    "RNG_ALGORITHM",
    "ConfigError",
    "Dataset",
    "FamilyConfig",
    "FamilyGenerationError",
    "GraphInstance",
    "GraphParams",
    "ScaledMatrixDerivation",
    "SensitivityConfig",
    "SensitivityResult",
    "Universe",
    "UniverseConfig",
    "UnsatisfiableHomophilyError",
    "ValidationReport",
    "assign_degree_factors",
    "assign_nodes",
    "build_universe",
    "community_labels",
    "derive_shifted_family",
    "generate_edges",
    "generate_family",
    "generate_graph",
    "make_node_splits",
    "make_splits",
    "read_dataset",
    "repair_connectivity",
    "rng_for_graph",
    "run_sensitivity",
    "sample_graph_params",
    "sample_node_features",
    "sample_pareto",
    "sample_truncated_gaussian",
    "scale_probability_matrix",
    "select_communities",
    "triangle_count",
    "validate_family",
    "write_dataset",
]

__version__ = "0.1.0"
