"""SER against iteration count for every configured solver and coordinate system."""
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import structlog

from uwsvd.channels import ChannelRealization, add_estimation_error
from uwsvd.detection import (
    Coordinates,
    build_problem_esignal,
    build_problem_original,
    exact_solve,
    to_estimate,
    uw_svd,
)
from uwsvd.experiments.common import Stream, converged_at, derive_rng, generator_for, run_trials
from uwsvd.experiments.outputs import Table
from uwsvd.infrastructure.monitoring import FlopCounter
from uwsvd.infrastructure.settings import SimConfig, SolverSettings
from uwsvd.modem import Constellation, SnrSpec, demodulate_hard, modulate, random_indices, symbol_error_rate, transmit
from uwsvd.solvers import SolverRegistry, SolverTrace

log = structlog.get_logger(__name__)

PERFECT_CSI = float("inf")

CurveKey = Tuple[float, float, str, str]


def solver_label(settings: SolverSettings) -> str:
    label = settings.algorithm.value
    if settings.lbfgs_textbook:
        label += "-textbook"
    if settings.cg_preconditioned:
        label += "-pcg"
    if settings.omega != 1.0:
        label += f"-w{settings.omega:g}"
    return label


@dataclass
class TrialOutcome:
    ser: Dict[CurveKey, np.ndarray] = field(default_factory=dict)
    flops: Dict[CurveKey, np.ndarray] = field(default_factory=dict)
    exact_ser: Dict[Tuple[float, float], float] = field(default_factory=dict)
    iterations: Dict[str, int] = field(default_factory=dict)
    stagnations: Dict[str, int] = field(default_factory=dict)
    traces: Dict[str, SolverTrace] = field(default_factory=dict)
    realization: Optional[ChannelRealization] = None


@dataclass
class SerCurveResult:
    table: Table
    convergence: Table
    ser: Dict[CurveKey, np.ndarray]
    flops: Dict[CurveKey, np.ndarray]
    exact_ser: Dict[Tuple[float, float], float]
    skipped: List[int]
    trials: int
    outcomes: List[Tuple[int, TrialOutcome]] = field(default_factory=list, repr=False)

    def converged(self, varpi_db: float, snr_db: float, solver: str, coords: str, factor: float = 1.05) -> Optional[int]:
        return converged_at(self.ser[(varpi_db, snr_db, solver, coords)], self.exact_ser[(varpi_db, snr_db)], factor)


def _ser_trial(trial: int, config: SimConfig, varpis: Sequence[float]) -> TrialOutcome:
    registry = SolverRegistry()
    realization = generator_for(config).draw(
        config.channel.model, derive_rng(config.seed, trial, Stream.CHANNEL), seed=config.seed
    )
    h = realization.h
    n = h.shape[1]
    constellation = Constellation.qam(config.modem.qam_order)
    mode = config.detection.mode
    needs_factors = any("uwsvd" in s.coordinate_list for s in config.solvers)
    outcome = TrialOutcome(realization=realization if trial < config.output.channel_dumps else None)

    for vi, varpi in enumerate(varpis):
        h_est = add_estimation_error(h, varpi, derive_rng(config.seed, trial, Stream.ESTIMATION, vi))
        svd_counter = FlopCounter()
        factors = uw_svd(h_est, realization.partition, svd_counter) if needs_factors else None

        for si, snr_db in enumerate(config.modem.snr_db):
            snr = SnrSpec(snr_db)
            indices = random_indices(n, constellation.order, derive_rng(config.seed, trial, Stream.SYMBOLS, si))
            y = transmit(h, modulate(indices, constellation), snr, derive_rng(config.seed, trial, Stream.NOISE, si))

            def ser_of(x_hat) -> float:
                return symbol_error_rate(demodulate_hard(x_hat, constellation), indices)

            exact = exact_solve(build_problem_original(h_est, y, mode, snr.rho_linear))
            outcome.exact_ser[(varpi, snr_db)] = ser_of(exact)

            for settings in config.solvers:
                label = solver_label(settings)
                for coords in settings.coordinate_list:
                    counter = FlopCounter()
                    if Coordinates(coords) is Coordinates.ESIGNAL:
                        counter.collect_metric("uw_svd_overhead", svd_counter.metrics["uw_svd_overhead"])
                        problem = build_problem_esignal(factors, y, mode, snr.rho_linear, counter)
                    else:
                        problem = build_problem_original(h_est, y, mode, snr.rho_linear, counter)

                    curve: List[float] = []
                    trace = registry.execute_solver(
                        settings.algorithm.value,
                        problem,
                        settings.to_spec(),
                        callback=lambda t, v: curve.append(ser_of(to_estimate(problem, v).x_hat)),
                        counter=counter,
                    )
                    before = counter.total
                    to_estimate(problem, trace.solution, counter)
                    post_cost = counter.total - before

                    key = (varpi, snr_db, label, coords)
                    outcome.ser[key] = np.asarray(curve)
                    outcome.flops[key] = np.asarray(trace.flops) + post_cost
                    outcome.iterations[label] = outcome.iterations.get(label, 0) + trace.iterations
                    outcome.stagnations[label] = outcome.stagnations.get(label, 0) + trace.stagnations
                    if trial == 0 and config.output.write_traces:
                        outcome.traces[f"trace_{label}_{coords}_snr{snr_db:g}_varpi{varpi:g}"] = trace
    return outcome


def _aggregate(config: SimConfig, varpis: Sequence[float], with_varpi: bool) -> SerCurveResult:
    results, skipped = run_trials(_ser_trial, config.trials, config.workers, config, list(varpis))
    ser_sum: Dict[CurveKey, np.ndarray] = {}
    flops_sum: Dict[CurveKey, np.ndarray] = {}
    exact_sum: Dict[Tuple[float, float], float] = {}
    for _, outcome in results:
        for key, curve in outcome.ser.items():
            ser_sum[key] = ser_sum.get(key, 0.0) + curve
            flops_sum[key] = flops_sum.get(key, 0.0) + outcome.flops[key]
        for key, value in outcome.exact_ser.items():
            exact_sum[key] = exact_sum.get(key, 0.0) + value

    count = max(len(results), 1)
    ser = {key: total / count for key, total in ser_sum.items()}
    flops = {key: total / count for key, total in flops_sum.items()}
    exact = {key: total / count for key, total in exact_sum.items()}

    lead = ["model", "rho_corr"] + (["varpi_db"] if with_varpi else [])
    table = Table(
        "est_error" if with_varpi else "ser_curve",
        lead + ["snr_db", "solver", "coords", "mode", "iteration", "ser", "cumulative_flops"],
    )
    convergence = Table(
        "est_error_converged" if with_varpi else "ser_curve_converged",
        (["varpi_db"] if with_varpi else [])
        + ["snr_db", "solver", "coords", "mode", "exact_ser", "converged_at", "flops_at_convergence", "complexity_reduction"],
    )
    model = int(config.channel.model)
    mode = config.detection.mode.value
    factor = config.output.convergence_factor

    for key in sorted(ser, key=lambda k: (k[0], k[1], _solver_order(config, k[2]), k[3])):
        varpi, snr_db, label, coords = key
        prefix = [model, config.channel.corr_rho] + ([varpi] if with_varpi else [])
        for t, (value, cost) in enumerate(zip(ser[key], flops[key]), start=1):
            table.add(*prefix, snr_db, label, coords, mode, t, float(value), float(cost))

        exact_value = exact[(varpi, snr_db)]
        at = converged_at(ser[key], exact_value, factor)
        cost_at = float(flops[key][at - 1]) if at is not None else None
        reduction = None
        baseline = (varpi, snr_db, label, "orig")
        if coords == "uwsvd" and baseline in ser and cost_at:
            orig_at = converged_at(ser[baseline], exact_value, factor)
            if orig_at is not None:
                reduction = float(flops[baseline][orig_at - 1]) / cost_at
        convergence.add(
            *([varpi] if with_varpi else []), snr_db, label, coords, mode, float(exact_value), at, cost_at, reduction
        )

    log.info("ser_curve_done", trials=len(results), skipped=len(skipped), curves=len(ser))
    return SerCurveResult(table, convergence, ser, flops, exact, skipped, len(results), results)


def _solver_order(config: SimConfig, label: str) -> int:
    labels = [solver_label(s) for s in config.solvers]
    return labels.index(label) if label in labels else len(labels)


def experiment_ser_vs_iter(config: SimConfig) -> SerCurveResult:
    return _aggregate(config, [PERFECT_CSI], with_varpi=False)


def experiment_estimation_error(config: SimConfig) -> SerCurveResult:
    """Detector built from a noisy channel estimate, transmission through the true channel."""
    varpis = config.estimation.varpi_db or [PERFECT_CSI]
    return _aggregate(config, varpis, with_varpi=True)
