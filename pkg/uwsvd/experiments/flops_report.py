"""Closed-form complexity next to counters measured on a drawn channel."""
from typing import Optional

import numpy as np

from uwsvd.detection import build_problem_esignal, post_process, uw_svd
from uwsvd.experiments.common import Stream, derive_rng, generator_for
from uwsvd.experiments.outputs import Table
from uwsvd.infrastructure.monitoring import FlopCounter
from uwsvd.infrastructure.settings import SimConfig
from uwsvd.modem import SnrSpec
from uwsvd.solvers import Algorithm, SolverSpec, flop_estimate, overhead_in_iterations, run

REPORTED = ("zf", "lmmse", "ri", "ji", "gs", "ssor", "lbfgs", "cg")


def measured_per_iteration(problem, algorithm: Algorithm) -> float:
    """Per-iteration counter of the second step, so one-off setup costs drop out."""
    counts = []
    for t in (1, 2):
        counter = FlopCounter()
        run(problem, SolverSpec(algorithm, t), counter=counter)
        counts.append(counter.metrics["per_iteration"])
    return counts[1] - counts[0]


def flops_report(config: SimConfig) -> Table:
    system = config.system
    n = system.n
    realization = generator_for(config).draw(config.channel.model, derive_rng(config.seed, 0, Stream.CHANNEL))
    h = realization.h
    y = h @ np.ones(n, dtype=np.complex128)
    rho = SnrSpec(config.modem.snr_db[0]).rho_linear
    mode = config.detection.mode

    svd_counter = FlopCounter()
    factors = uw_svd(h, realization.partition, svd_counter)
    post_process(factors, np.ones(n, dtype=np.complex128), svd_counter)
    measured_overhead = svd_counter.metrics["uw_svd_overhead"]

    table = Table(
        "flops",
        ["algorithm", "gram_build", "matrix_inverse", "per_iteration", "uw_svd_overhead",
         "measured_per_iteration", "measured_uw_svd_overhead", "overhead_in_iterations"],
    )
    for name in REPORTED:
        estimate = flop_estimate(name, system.m, n, system.n_ue)
        measured: Optional[float] = None
        in_iterations: Optional[float] = None
        if name not in ("zf", "lmmse"):
            problem = build_problem_esignal(factors, y, mode, rho)
            measured = measured_per_iteration(problem, Algorithm(name))
            in_iterations = overhead_in_iterations(name, system.m, n, system.n_ue)
        table.add(
            name,
            estimate.gram_build,
            estimate.matrix_inverse,
            estimate.per_iteration,
            estimate.uw_svd_overhead,
            measured,
            measured_overhead,
            in_iterations,
        )
    return table
