"""Multi-task learning with labeled and unlabeled tasks.

Estimate pairwise discrepancies between unlabeled task samples, pick which
tasks to label and how to weight them by minimising the data-dependent part
of a multi-task generalization bound, then train one weighted ridge
predictor per task.
"""
from .bound import BoundConfig, BoundReport, bound_report, complexity_terms, lambda_diagnostic
from .discrepancy import DiscrepancyMatrix, build_matrix, discrepancy_bruteforce, estimate_discrepancy
from .exceptions import FormatError, MissingFileError, MissingLabelsError, ValidationError
from .learners import (
    CVConfig,
    LinearModel,
    cv_select_lambda,
    evaluate,
    train_fully_labeled_reference,
    train_multitask_baseline,
    train_transfer_models,
    train_weighted_ridge,
)
from .selection import (
    ObjectiveConfig,
    WeightMatrix,
    assign_nearest_source,
    mixed_norm_12,
    mixed_norm_21,
    objective_value,
    optimize_weights,
    project_row_to_simplex,
    select_active_grasp,
    select_active_kmedoids,
)
from .tasks import LabeledSubset, TaskCollection, draw_labeled_subsets, generate_synthetic, load_collection

__version__ = "0.1.0"
