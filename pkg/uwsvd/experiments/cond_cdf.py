"""Condition numbers of the original and e-signal Gram matrices over channel draws."""
from dataclasses import dataclass
from typing import Dict, List

import numpy as np
import structlog

from uwsvd.detection import DetectorMode, build_problem_esignal, build_problem_original, uw_svd
from uwsvd.experiments.common import Stream, derive_rng, empirical_cdf, generator_for, run_trials
from uwsvd.experiments.outputs import Table
from uwsvd.infrastructure.settings import SimConfig
from uwsvd.linalg import cond_number
from uwsvd.modem import SnrSpec

log = structlog.get_logger(__name__)

METRICS = ("A_zf", "A_lmmse", "Phi_zf", "Phi_lmmse")


@dataclass
class CondCdfResult:
    values: Dict[str, np.ndarray]
    skipped: List[int]
    table: Table

    def median(self, metric: str) -> float:
        return float(np.median(self.values[metric]))


def gram_conditions(h, partition, rho: float) -> Dict[str, float]:
    """cond(A_zf), cond(A_lmmse), cond(Phi_zf), cond(Phi_lmmse) for one channel."""
    factors = uw_svd(h, partition)
    y = np.zeros(h.shape[0], dtype=np.complex128)
    out = {}
    for mode, suffix in ((DetectorMode.ZF, "zf"), (DetectorMode.LMMSE, "lmmse")):
        original = build_problem_original(h, y, mode, rho)
        esignal = build_problem_esignal(factors, y, mode, rho)
        out[f"A_{suffix}"] = cond_number(original.operator.materialize().matrix)
        out[f"Phi_{suffix}"] = cond_number(esignal.operator.materialize().matrix)
    return out


def _cond_trial(trial: int, config: SimConfig) -> Dict[str, float]:
    generator = generator_for(config)
    realization = generator.draw(config.channel.model, derive_rng(config.seed, trial, Stream.CHANNEL), seed=config.seed)
    rho = SnrSpec(config.modem.snr_db[0]).rho_linear
    return gram_conditions(realization.h, realization.partition, rho)


def experiment_cond_cdf(config: SimConfig) -> CondCdfResult:
    """Empirical CDFs of the four condition numbers; cond(*_lmmse) uses the first SNR point."""
    results, skipped = run_trials(_cond_trial, config.trials, config.workers, config)
    table = Table("cond_cdf", ["model", "rho_corr", "metric", "value", "cdf"])
    values = {}
    if not results:
        log.warning("cond_cdf_no_valid_draws", trials=config.trials)
        return CondCdfResult({metric: np.array([]) for metric in METRICS}, skipped, table)

    for metric in METRICS:
        ordered, cdf = empirical_cdf([r[metric] for _, r in results])
        values[metric] = ordered
        for value, probability in zip(ordered, cdf):
            table.add(int(config.channel.model), config.channel.corr_rho, metric, float(value), float(probability))

    log.info(
        "cond_cdf_done",
        trials=len(results),
        skipped=len(skipped),
        median_a_zf=float(np.median(values["A_zf"])),
        median_phi_zf=float(np.median(values["Phi_zf"])),
    )
    return CondCdfResult(values, skipped, table)
