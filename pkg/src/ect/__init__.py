"""Multiclass-to-binary reductions and error-correcting tournaments.

The package has three layers: reductions over label trees (plain, filtered,
cost-sensitive, all-pairs), multi-elimination tournaments with adversarial
comparators, and an analysis layer that re-checks every regret and depth
guarantee numerically. See the README for the command-line entry points.
"""

from .core import (
    AuditCounters,
    ConditionalDistribution,
    CostVector,
    Example,
    LabelTree,
    WeightedBinaryExample,
    build_balanced_tree,
    label_regrets,
)
from .learners import (
    CostingConfig,
    LearnerSpec,
    costing_resample,
    learn,
    predict,
    weighted_error,
    weighted_regret,
)
from .reductions import (
    ReductionModel,
    train_all_pairs,
    train_apft,
    train_cs_filter_tree,
    train_filter_tree,
    train_tree,
)
from .tournaments import (
    ChargedFinalTree,
    TournamentSchedule,
    build_final_tree,
    build_schedule,
    make_adversary,
    min_dethroning_cost,
    parity_adversary_run,
    run_tournament,
)

__version__ = "0.1.0"

__all__ = [
    "AuditCounters",
    "ChargedFinalTree",
    "ConditionalDistribution",
    "CostVector",
    "CostingConfig",
    "Example",
    "LabelTree",
    "LearnerSpec",
    "ReductionModel",
    "TournamentSchedule",
    "WeightedBinaryExample",
    "build_balanced_tree",
    "build_final_tree",
    "build_schedule",
    "costing_resample",
    "label_regrets",
    "learn",
    "make_adversary",
    "min_dethroning_cost",
    "parity_adversary_run",
    "predict",
    "run_tournament",
    "train_all_pairs",
    "train_apft",
    "train_cs_filter_tree",
    "train_filter_tree",
    "train_tree",
    "weighted_error",
    "weighted_regret",
]
