"""Numeric checks of the conditioning results behind the e-signal detectors.

Asymptotic statements are rendered either as exact assertions on block-orthogonal
channels (users on disjoint service-antenna rows) or as medians over random draws.
"""
from dataclasses import dataclass
from typing import Callable, Dict, List, Sequence

import numpy as np
import structlog

from uwsvd.channels import ChannelGenerator, ChannelModelId, gen_iid_rayleigh, normalize_per_user
from uwsvd.detection import (
    DetectorMode,
    block_orthogonal_channel,
    build_problem_esignal,
    build_problem_original,
    exact_solve,
    post_process,
    uw_svd,
)
from uwsvd.experiments.common import Stream, derive_rng
from uwsvd.experiments.outputs import Table
from uwsvd.infrastructure.settings import SimConfig
from uwsvd.linalg import cond_number, eigen_extremes_hermitian
from uwsvd.modem import Constellation, SnrSpec, modulate, random_indices, transmit

log = structlog.get_logger(__name__)

BLOCK_ORTHOGONAL_RHO = 0.9
PRODUCT_IDENTITY_TOL = 1e-6
EQUIVALENCE_TOL = 1e-8
ASYMPTOTIC_GAP_BOUND = 0.05
FAVORABLE_PROPAGATION_BOUND = 0.12
INTER_USER_BOUND = 0.1
CORRELATED_FRACTION = 0.99


@dataclass(frozen=True)
class CheckResult:
    name: str
    measured: float
    bound: float
    passed: bool


def _gram(h) -> np.ndarray:
    return h.conj().T @ h


def _phi(h, partition) -> np.ndarray:
    psi = uw_svd(h, partition).psi
    return psi.conj().T @ psi


def _lmmse_conditions(h, partition, rho: float):
    factors = uw_svd(h, partition)
    a_lmmse = _gram(h) + np.eye(h.shape[1]) / rho
    phi_lmmse = _gram(factors.psi) + np.diag(1.0 / (rho * factors.sigma**2))
    return cond_number(phi_lmmse), cond_number(a_lmmse)


def _model1_channel(m: int, partition: Sequence[int], rng) -> np.ndarray:
    return normalize_per_user(gen_iid_rayleigh(m, sum(partition), rng), list(partition))


def block_orthogonal_checks(m: int, partition: Sequence[int], rng, rho_db: float) -> List[CheckResult]:
    h = block_orthogonal_channel(m, partition, BLOCK_ORTHOGONAL_RHO, rng)
    a_zf = _gram(h)
    cond_phi = cond_number(_phi(h, partition))
    cond_a = cond_number(a_zf)
    offsets = np.concatenate([[0], np.cumsum(partition)])
    block_max = max(cond_number(a_zf[s:e, s:e]) for s, e in zip(offsets[:-1], offsets[1:]))

    rho = 10.0 ** (rho_db / 10.0)
    cond_phi_l, cond_a_l = _lmmse_conditions(h, partition, rho)
    product_error = abs(cond_phi_l * cond_a_l - cond_a) / cond_a

    return [
        CheckResult("block_orthogonal_cond_phi_zf", cond_phi, 1.0, abs(cond_phi - 1.0) <= 1e-8),
        CheckResult("block_orthogonal_block_lower_bound", cond_a, block_max, cond_a >= block_max * (1 - 1e-12)),
        CheckResult("block_orthogonal_zf_strict_improvement", cond_a, cond_phi, cond_a > cond_phi),
        CheckResult("block_orthogonal_lmmse_product_identity", product_error, PRODUCT_IDENTITY_TOL, product_error <= PRODUCT_IDENTITY_TOL),
    ]


def lmmse_crossover_db(h, partition, low_db: float = -60.0, high_db: float = 60.0, steps: int = 60) -> float:
    """SNR (dB) where cond(Phi_lmmse) drops below cond(A_lmmse), by bisection."""

    def phi_better(rho_db: float) -> bool:
        cond_phi, cond_a = _lmmse_conditions(h, partition, 10.0 ** (rho_db / 10.0))
        return cond_phi < cond_a

    if phi_better(low_db) or not phi_better(high_db):
        raise ValueError("crossover is not bracketed by the search interval")
    for _ in range(steps):
        mid = 0.5 * (low_db + high_db)
        if phi_better(mid):
            high_db = mid
        else:
            low_db = mid
    return 0.5 * (low_db + high_db)


def threshold_check(m: int, partition: Sequence[int], rng, tolerance_db: float) -> CheckResult:
    h = block_orthogonal_channel(m, partition, BLOCK_ORTHOGONAL_RHO, rng)
    extremes = eigen_extremes_hermitian(_gram(h))
    predicted_db = 10.0 * np.log10(1.0 / np.sqrt(extremes.lambda_max * extremes.lambda_min))
    try:
        measured_db = lmmse_crossover_db(h, partition)
    except ValueError:
        return CheckResult("lmmse_snr_threshold_db_error", float("nan"), tolerance_db, False)
    error = abs(measured_db - predicted_db)
    return CheckResult("lmmse_snr_threshold_db_error", error, tolerance_db, error <= tolerance_db)


def _median_over(draws: int, stat: Callable[[int], float]) -> float:
    return float(np.median([stat(d) for d in range(draws)]))


def asymptotic_checks(config: SimConfig) -> List[CheckResult]:
    """Model 1 sweeps over growing M: relative cond gap, favorable propagation, inter-user orthogonality."""
    theory = config.theory
    partition = [config.system.n_ue] * config.system.k_users
    k_users = len(partition)
    gaps, fp, inter = [], [], []

    for mi, m in enumerate(theory.asymptotic_m):
        channels = [
            _model1_channel(m, partition, derive_rng(config.seed, d, Stream.CHANNEL, 1000 + mi))
            for d in range(theory.asymptotic_draws)
        ]

        def gap(d: int) -> float:
            cond_a = cond_number(_gram(channels[d]))
            return abs(cond_number(_phi(channels[d], partition)) - cond_a) / cond_a

        def favorable(d: int) -> float:
            block = channels[d][:, : partition[0]]
            return float(np.linalg.norm(_gram(block) - np.eye(partition[0])))

        def cross(d: int) -> float:
            if k_users < 2:
                return 0.0
            return float(np.linalg.norm(channels[d][:, : partition[0]].conj().T @ channels[d][:, partition[0] : 2 * partition[0]]))

        gaps.append(_median_over(theory.asymptotic_draws, gap))
        fp.append(_median_over(theory.asymptotic_draws, favorable))
        inter.append(_median_over(theory.asymptotic_draws, cross))
        log.debug("asymptotic_point", m=m, cond_gap=gaps[-1], favorable=fp[-1], inter_user=inter[-1])

    def decreasing(values: List[float]) -> bool:
        return all(b < a for a, b in zip(values, values[1:]))

    return [
        CheckResult("model1_cond_gap_decreasing", float(decreasing(gaps)), 1.0, decreasing(gaps)),
        CheckResult("model1_cond_gap_at_max_m", gaps[-1], ASYMPTOTIC_GAP_BOUND, gaps[-1] <= ASYMPTOTIC_GAP_BOUND),
        CheckResult("favorable_propagation_at_max_m", fp[-1], FAVORABLE_PROPAGATION_BOUND,
                    fp[-1] <= FAVORABLE_PROPAGATION_BOUND and decreasing(fp)),
        CheckResult("inter_user_orthogonality_at_max_m", inter[-1], INTER_USER_BOUND,
                    inter[-1] < INTER_USER_BOUND and (k_users < 2 or decreasing(inter))),
    ]


def correlated_checks(config: SimConfig) -> List[CheckResult]:
    """cond(Phi_zf) < cond(A_zf) on correlated near-field channels."""
    geometry = config.system.build_geometry()
    results = []
    for model in (ChannelModelId.MODEL3, ChannelModelId.MODEL4):
        for ri, rho_corr in enumerate(config.theory.correlated_rho):
            channel = config.channel.model_copy(update={"corr_rho": rho_corr})
            generator = ChannelGenerator(geometry, channel.propagation_params(), channel.los_field_params())
            wins = 0
            for d in range(config.theory.correlated_draws):
                h = generator.draw(model, derive_rng(config.seed, d, Stream.CHANNEL, 2000 + 10 * int(model) + ri)).h
                wins += cond_number(_phi(h, generator.partition)) < cond_number(_gram(h))
            fraction = wins / config.theory.correlated_draws
            results.append(
                CheckResult(f"model{int(model)}_rho{rho_corr:g}_phi_better_fraction", fraction, CORRELATED_FRACTION,
                            fraction >= CORRELATED_FRACTION)
            )
    return results


def equivalence_check(config: SimConfig) -> CheckResult:
    """e-ZF/e-LMMSE with post-processing against ZF/LMMSE over all models and correlations."""
    geometry = config.system.build_geometry()
    constellation = Constellation.qam(config.modem.qam_order)
    snr = SnrSpec(config.modem.snr_db[0])
    rhos = (0.0, 0.5, 0.8)
    generators: Dict[float, ChannelGenerator] = {}
    worst = 0.0
    for i in range(config.theory.equivalence_instances):
        model = ChannelModelId(1 + i % 4)
        rho_corr = rhos[(i // 4) % len(rhos)]
        if rho_corr not in generators:
            channel = config.channel.model_copy(update={"corr_rho": rho_corr})
            generators[rho_corr] = ChannelGenerator(geometry, channel.propagation_params(), channel.los_field_params())
        generator = generators[rho_corr]
        h = generator.draw(model, derive_rng(config.seed, i, Stream.CHANNEL, 3000)).h
        x = modulate(random_indices(h.shape[1], constellation.order, derive_rng(config.seed, i, Stream.SYMBOLS, 3000)), constellation)
        y = transmit(h, x, snr, derive_rng(config.seed, i, Stream.NOISE, 3000))
        factors = uw_svd(h, generator.partition)
        for mode in (DetectorMode.ZF, DetectorMode.LMMSE):
            reference = exact_solve(build_problem_original(h, y, mode, snr.rho_linear))
            via_esignal = post_process(factors, exact_solve(build_problem_esignal(factors, y, mode, snr.rho_linear)))
            worst = max(worst, float(np.linalg.norm(via_esignal - reference) / np.linalg.norm(reference)))
    return CheckResult("detector_equivalence_max_relative_error", worst, EQUIVALENCE_TOL, worst <= EQUIVALENCE_TOL)


def theory_check(config: SimConfig) -> Table:
    partition = [config.system.n_ue] * config.system.k_users
    rng = derive_rng(config.seed, 0, Stream.CHANNEL, 4000)
    rho_db = config.modem.snr_db[0]

    checks: List[CheckResult] = []
    checks += block_orthogonal_checks(config.system.m, partition, rng, rho_db)
    checks.append(threshold_check(config.system.m, partition, rng, config.theory.threshold_tolerance_db))
    checks += asymptotic_checks(config)
    checks += correlated_checks(config)
    checks.append(equivalence_check(config))

    table = Table("theory_check", ["check_name", "measured", "bound", "pass"])
    for check in checks:
        table.add(check.name, float(check.measured), float(check.bound), bool(check.passed))
    failed = [c.name for c in checks if not c.passed]
    log.info("theory_check_done", checks=len(checks), failed=failed)
    return table
