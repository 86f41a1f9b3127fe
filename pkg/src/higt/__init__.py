"""Hierarchical group thresholding (HiGT) for multi-task regression with
overlapping input-group and output-group sparsity.

A tree-structured screening pass certifies blocks of coefficients zero from
optimality conditions, then an accelerated proximal-gradient solver handles
the problem restricted to the survivors.
"""

from .core import (
    Dataset,
    GroupStructure,
    RegParams,
    objective,
    penalty,
    smooth_gradient,
    standardize,
)
from .errors import (
    ConstantRow,
    DimensionMismatch,
    EmptyGroups,
    HigtError,
    InfeasibleConfig,
    NonFiniteObjective,
    NotInternal,
    NotLeaf,
)
from .metrics import RecoveryScore, score
from .screening import (
    RuleEvaluation,
    SurvivorSet,
    block_rule,
    full_survivor_set,
    leaf_rule,
    precompute_correlation,
    screen,
    soft_residual,
)
from .simulation import SimConfig, SimInstance, plant_support, simulate
from .solver import (
    FitResult,
    SolverConfig,
    estimate_lipschitz,
    fit,
    kkt_certificate,
    prox_penalty,
    solve_restricted,
)
from .tree import BlockNode, ScreeningTree, build_tree, dfs_order, format_tree

__version__ = "0.1.0"

__all__ = [
    "BlockNode",
    "ConstantRow",
    "Dataset",
    "DimensionMismatch",
    "EmptyGroups",
    "FitResult",
    "GroupStructure",
    "HigtError",
    "InfeasibleConfig",
    "NonFiniteObjective",
    "NotInternal",
    "NotLeaf",
    "RecoveryScore",
    "RegParams",
    "RuleEvaluation",
    "ScreeningTree",
    "SimConfig",
    "SimInstance",
    "SolverConfig",
    "SurvivorSet",
    "block_rule",
    "build_tree",
    "dfs_order",
    "estimate_lipschitz",
    "fit",
    "format_tree",
    "full_survivor_set",
    "kkt_certificate",
    "leaf_rule",
    "objective",
    "penalty",
    "plant_support",
    "precompute_correlation",
    "prox_penalty",
    "score",
    "screen",
    "simulate",
    "smooth_gradient",
    "soft_residual",
    "solve_restricted",
    "standardize",
]
