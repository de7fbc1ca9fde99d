"""Utility-maximizing counterfactual explanations under strategic behavior.

A decision maker screens a discrete population, publishes up to k feature
values as counterfactual explanations, and individuals best-respond by
adapting whenever the benefit gain covers their cost. This package models
that game, optimizes explanation sets (greedy, matroid-constrained greedy)
and jointly optimal policies (closed form per set, randomized greedy over
sets), and ships baselines, synthetic generators and a seeded CSV experiment
harness.
"""

from .algorithms import (
    BRUTE_FORCE_CAP,
    JointSolution,
    RngStream,
    brute_force_fixed,
    brute_force_joint,
    derive_seed,
    exhaustive_best_policy,
    greedy_fixed_policy,
    greedy_matroid,
    joint_marginal_state,
    joint_objective,
    marginal_gain_joint,
    optimal_policy_for,
    randomized_joint,
)
from .baselines import (
    black_box_utility,
    diverse_explanations,
    min_cost_explanations,
    threshold_policy,
)
from .behavior import (
    NO_EXPLANATION,
    Assignment,
    BestResponseResult,
    assign_explanations,
    best_respond,
    fixed_marginal_state,
    group_improvement,
    leakage_utility,
    leakage_utility_mc,
    marginal_gain_fixed,
    region_of_adaptation,
    transport_matrix,
    utility,
)
from .core import (
    INFINITE_COST,
    ExplanationSet,
    Instance,
    PartitionMatroid,
    Policy,
    ground_set_accepted,
    ground_set_viable,
    is_outcome_monotonic,
    is_rational,
    make_instance,
    sort_canonical,
    validate,
)
from .datagen import (
    FeatureTable,
    SynthConfig,
    build_cost_matrix,
    generate_synthetic,
    load_feature_table,
    load_instance,
    save_feature_table,
    save_instance,
)
from .harness import TOOL_VERSION, ExperimentConfig

__version__ = TOOL_VERSION

__all__ = [
    "Assignment",
    "BestResponseResult",
    "BRUTE_FORCE_CAP",
    "ExperimentConfig",
    "ExplanationSet",
    "FeatureTable",
    "INFINITE_COST",
    "Instance",
    "JointSolution",
    "NO_EXPLANATION",
    "PartitionMatroid",
    "Policy",
    "RngStream",
    "SynthConfig",
    "TOOL_VERSION",
    "assign_explanations",
    "best_respond",
    "black_box_utility",
    "brute_force_fixed",
    "brute_force_joint",
    "build_cost_matrix",
    "derive_seed",
    "diverse_explanations",
    "exhaustive_best_policy",
    "fixed_marginal_state",
    "generate_synthetic",
    "greedy_fixed_policy",
    "greedy_matroid",
    "ground_set_accepted",
    "ground_set_viable",
    "group_improvement",
    "is_outcome_monotonic",
    "is_rational",
    "joint_marginal_state",
    "joint_objective",
    "leakage_utility",
    "leakage_utility_mc",
    "load_feature_table",
    "load_instance",
    "make_instance",
    "marginal_gain_fixed",
    "marginal_gain_joint",
    "min_cost_explanations",
    "optimal_policy_for",
    "randomized_joint",
    "region_of_adaptation",
    "save_feature_table",
    "save_instance",
    "sort_canonical",
    "threshold_policy",
    "transport_matrix",
    "utility",
    "validate",
]
