"""Geometry of (non-reciprocal) pairwise-comparisons matrices and random ensembles."""

from .core import (
    MatrixClass,
    SplitMatrix,
    classify,
    exp_map,
    gauge_action,
    hadamard_inv,
    hadamard_mul,
    log_distance,
    log_map,
    permute_action,
    phi_split,
    phi_unsplit,
)
from .ensemble import (
    Ensemble,
    LawSpec,
    expectation_mult,
    lift_inclusion,
    make_dirac,
    mixture,
    pushforward,
    sample_ensemble,
    stochastic_index,
    truncate_support,
)
from .errors import ComputationError, PCError, ValidationError
from .indices import IndexSpec, distance_index, indicator_transform, kii_matrix, kii_triad
from .projections import (
    LFactorization,
    gmm_project,
    l_factorize,
    matrix_from_weights,
    pi_prime,
    project_cm,
    project_consistent_log,
    project_reciprocal,
    project_symmetric,
    weights_from_consistent,
)
from .reduction import (
    OptimizerConfig,
    TransportResult,
    derandomize_transport,
    frechet_mean_log,
    minimize_index,
    w2_assignment,
    w2_to_dirac,
)

__version__ = "0.1.0"

__all__ = [
    "classify",
    "ComputationError",
    "derandomize_transport",
    "distance_index",
    "Ensemble",
    "exp_map",
    "expectation_mult",
    "frechet_mean_log",
    "gauge_action",
    "gmm_project",
    "hadamard_inv",
    "hadamard_mul",
    "IndexSpec",
    "indicator_transform",
    "kii_matrix",
    "kii_triad",
    "l_factorize",
    "LawSpec",
    "LFactorization",
    "lift_inclusion",
    "log_distance",
    "log_map",
    "make_dirac",
    "matrix_from_weights",
    "MatrixClass",
    "minimize_index",
    "mixture",
    "OptimizerConfig",
    "PCError",
    "permute_action",
    "phi_split",
    "phi_unsplit",
    "pi_prime",
    "project_cm",
    "project_consistent_log",
    "project_reciprocal",
    "project_symmetric",
    "pushforward",
    "sample_ensemble",
    "SplitMatrix",
    "stochastic_index",
    "TransportResult",
    "truncate_support",
    "ValidationError",
    "w2_assignment",
    "w2_to_dirac",
    "weights_from_consistent",
]
