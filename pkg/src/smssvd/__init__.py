"""Submatrix selection SVD: adaptive, orthogonal low-rank signal decomposition."""
from .linalg import (
    DataMatrix,
    SvdFactors,
    make_rng,
    numerical_rank,
    orthonormalize,
    project_complement,
    svd_truncated,
)
from .restricted import check_theorem1, restrict_svd
from .selection import (
    ProjectionScoreRecord,
    SelectionMap,
    optimize_selection,
    projection_score,
    variance_filter,
)
from .engine import (
    Decomposition,
    DecompositionBlock,
    EngineConfig,
    block_residuals,
    check_theorem2,
    reconstruct,
    residual_norm,
    smssvd,
)
from .spc import SpcConfig, SpcFactors, soft_threshold, spc
from .synthetic import GroundTruth, SyntheticSpec, biplot_scenario, generate
from .evaluation import aic_curve, aic_gmm, compare_methods, greedy_match

__version__ = "0.1.0"

__all__ = [
    "DataMatrix",
    "SvdFactors",
    "make_rng",
    "numerical_rank",
    "orthonormalize",
    "project_complement",
    "svd_truncated",
    "check_theorem1",
    "restrict_svd",
    "ProjectionScoreRecord",
    "SelectionMap",
    "optimize_selection",
    "projection_score",
    "variance_filter",
    "Decomposition",
    "DecompositionBlock",
    "EngineConfig",
    "block_residuals",
    "check_theorem2",
    "reconstruct",
    "residual_norm",
    "smssvd",
    "SpcConfig",
    "SpcFactors",
    "soft_threshold",
    "spc",
    "GroundTruth",
    "SyntheticSpec",
    "biplot_scenario",
    "generate",
    "aic_curve",
    "aic_gmm",
    "compare_methods",
    "greedy_match",
]
