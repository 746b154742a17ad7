"""Workload-adaptive strategy selection for the (eps, delta) matrix mechanism."""

from .analysis import ErrorReport, empirical_error, lower_bound, svdb, thm3_cap, workload_error
from .baselines import (gaussian_baseline_error, hierarchy_strategy, identity_strategy,
                        wavelet_strategy, workload_strategy)
from .domain import (Attribute, CellConditions, DomainShape, Workload, all_range_workload,
                     build_data_vector, cdf_workload, k_way_marginals, marginal_workload,
                     normalize_rows, permute_cells, random_predicate_workload,
                     random_range_workload, student_conditions, student_workload)
from .eigendesign import Strategy, complete_columns, eigen_design, eigen_queries
from .mechanism import PrivacyParams, gaussian_mechanism, matrix_mechanism
from .reduction import ReductionConfig, eigen_separation, principal_vectors, select_eigen
from .spectral import eigendecompose, gram
from .weighting import WeightingProblem, optimize_weights, verify_kkt

__version__ = "0.1.0"

__all__ = [
    "Attribute",
    "CellConditions",
    "DomainShape",
    "ErrorReport",
    "PrivacyParams",
    "ReductionConfig",
    "Strategy",
    "WeightingProblem",
    "Workload",
    "all_range_workload",
    "build_data_vector",
    "cdf_workload",
    "complete_columns",
    "eigen_design",
    "eigen_queries",
    "eigen_separation",
    "eigendecompose",
    "empirical_error",
    "gaussian_baseline_error",
    "gaussian_mechanism",
    "gram",
    "hierarchy_strategy",
    "identity_strategy",
    "k_way_marginals",
    "lower_bound",
    "marginal_workload",
    "matrix_mechanism",
    "normalize_rows",
    "optimize_weights",
    "permute_cells",
    "principal_vectors",
    "random_predicate_workload",
    "random_range_workload",
    "select_eigen",
    "student_conditions",
    "student_workload",
    "svdb",
    "thm3_cap",
    "verify_kkt",
    "wavelet_strategy",
    "workload_error",
    "workload_strategy",
]
