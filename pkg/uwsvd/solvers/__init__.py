from uwsvd.solvers.flops import FlopBreakdown, flop_estimate, overhead_in_iterations, uw_svd_overhead
from uwsvd.solvers.iterative import (
    Algorithm,
    CgState,
    LbfgsState,
    Preconditioner,
    SolverSpec,
    SolverTrace,
    build_preconditioner,
    run,
    step_cg,
    step_lbfgs,
    step_matrix_splitting,
    step_richardson,
)
from uwsvd.solvers.registry import SolverFamily, SolverMetadata, SolverRegistry

__all__ = [
    "Algorithm",
    "CgState",
    "FlopBreakdown",
    "LbfgsState",
    "Preconditioner",
    "SolverFamily",
    "SolverMetadata",
    "SolverRegistry",
    "SolverSpec",
    "SolverTrace",
    "build_preconditioner",
    "flop_estimate",
    "overhead_in_iterations",
    "run",
    "step_cg",
    "step_lbfgs",
    "step_matrix_splitting",
    "step_richardson",
    "uw_svd_overhead",
]
