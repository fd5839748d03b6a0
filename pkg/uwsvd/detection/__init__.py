from uwsvd.detection.problem import (
    Coordinates,
    DenseGram,
    DetectionProblem,
    DetectorMode,
    Estimate,
    FactoredGram,
    GramOperator,
    block_orthogonal_channel,
    build_problem_esignal,
    build_problem_original,
    exact_solve,
    to_estimate,
)
from uwsvd.detection.uw_svd import SIGMA_FLOOR_RATIO, UwSvdFactors, post_process, uw_svd

__all__ = [
    "SIGMA_FLOOR_RATIO",
    "Coordinates",
    "DenseGram",
    "DetectionProblem",
    "DetectorMode",
    "Estimate",
    "FactoredGram",
    "GramOperator",
    "UwSvdFactors",
    "block_orthogonal_channel",
    "build_problem_esignal",
    "build_problem_original",
    "exact_solve",
    "post_process",
    "to_estimate",
    "uw_svd",
]
