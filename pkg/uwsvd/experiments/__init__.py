from uwsvd.experiments.common import Stream, converged_at, derive_rng, empirical_cdf, run_trials
from uwsvd.experiments.cond_cdf import experiment_cond_cdf, gram_conditions
from uwsvd.experiments.flops_report import flops_report
from uwsvd.experiments.manager import ExperimentManager, ExperimentResult
from uwsvd.experiments.outputs import Table, write_csv
from uwsvd.experiments.ser_curve import experiment_estimation_error, experiment_ser_vs_iter
from uwsvd.experiments.theory import CheckResult, theory_check

__all__ = [
    "CheckResult",
    "ExperimentManager",
    "ExperimentResult",
    "Stream",
    "Table",
    "converged_at",
    "derive_rng",
    "empirical_cdf",
    "experiment_cond_cdf",
    "experiment_estimation_error",
    "experiment_ser_vs_iter",
    "flops_report",
    "gram_conditions",
    "run_trials",
    "theory_check",
    "write_csv",
]
