"""Joint estimation of related sparse Gaussian graphical models with
knowledge supplied as entry weights.

The pipeline is::

    data  -> proxy_backward_map -> estimate(weights, lambda) -> PrecisionDecomposition

with simulation protocols, edge-recovery metrics and a command-line front end
(``jeek simulate | estimate | sweep``) around it.
"""

__version__ = "0.1.0"

from .backward import (BackwardMap, CovarianceSet, SingularBackwardMapError, TaskDataset,
                       ThresholdSelectionError, backward_map, proxy_backward_map,
                       sample_covariance, select_v, soft_threshold_matrix)
from .entry_lp import (EntryProblem, EntrySolution, estimate, lambda_grid, lambda_path,
                       solve_entries, solve_entry)
from .evaluate import ConfusionCounts, MetricsReport, confusion, f1, frobenius_error, roc_auc, sweep
from .knowledge import (KnowledgeWeights, PrecisionDecomposition, build_cohub_weights,
                        build_group_weights, build_matrix_weights, build_perturbed_weights,
                        kw_dual_norm, kw_norm_value, uniform_weights)
from .simulate import (GroundTruth, gen_brain, gen_cohub, gen_perturbed, gen_random_graphs,
                       generate, sample_gaussian)

__all__ = [
    "BackwardMap", "CovarianceSet", "SingularBackwardMapError", "TaskDataset",
    "ThresholdSelectionError", "backward_map", "proxy_backward_map", "sample_covariance",
    "select_v", "soft_threshold_matrix",
    "EntryProblem", "EntrySolution", "estimate", "lambda_grid", "lambda_path",
    "solve_entries", "solve_entry",
    "ConfusionCounts", "MetricsReport", "confusion", "f1", "frobenius_error", "roc_auc", "sweep",
    "KnowledgeWeights", "PrecisionDecomposition", "build_cohub_weights", "build_group_weights",
    "build_matrix_weights", "build_perturbed_weights", "kw_dual_norm", "kw_norm_value",
    "uniform_weights",
    "GroundTruth", "gen_brain", "gen_cohub", "gen_perturbed", "gen_random_graphs", "generate",
    "sample_gaussian",
]
