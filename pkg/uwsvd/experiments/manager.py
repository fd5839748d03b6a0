from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, List, Optional

import structlog

from uwsvd.channels import ChannelRealization, write_channel_dump
from uwsvd.experiments.cond_cdf import experiment_cond_cdf
from uwsvd.experiments.flops_report import flops_report
from uwsvd.experiments.outputs import Table, write_sidecar, write_table
from uwsvd.experiments.ser_curve import SerCurveResult, experiment_estimation_error, experiment_ser_vs_iter
from uwsvd.experiments.theory import theory_check
from uwsvd.infrastructure.monitoring import RunMetrics
from uwsvd.infrastructure.settings import ExperimentType, SimConfig
from uwsvd.solvers import SolverTrace

log = structlog.get_logger(__name__)


@dataclass
class ExperimentResult:
    experiment: ExperimentType
    tables: List[Table]
    written: List[Path] = field(default_factory=list)
    skipped_trials: List[int] = field(default_factory=list)
    metrics: Optional[RunMetrics] = None
    traces: Dict[str, SolverTrace] = field(default_factory=dict)
    channel_dumps: Dict[int, ChannelRealization] = field(default_factory=dict)

    def table(self, name: str) -> Table:
        for table in self.tables:
            if table.name == name:
                return table
        raise KeyError(name)

    @property
    def summary(self) -> Table:
        """The table the CLI prints."""
        return self.tables[-1] if self.experiment in (ExperimentType.SER_CURVE, ExperimentType.EST_ERROR) else self.tables[0]


class ExperimentManager:
    """Dispatches a validated config to its experiment and writes the outputs."""

    def __init__(self):
        self.handlers: Dict[ExperimentType, Callable[[SimConfig, RunMetrics], ExperimentResult]] = {
            ExperimentType.COND_CDF: self._cond_cdf,
            ExperimentType.SER_CURVE: self._ser_curve,
            ExperimentType.EST_ERROR: self._est_error,
            ExperimentType.THEORY_CHECK: self._theory_check,
            ExperimentType.FLOPS: self._flops,
        }

    def run(self, config: SimConfig, write: bool = True, metrics_file: Optional[Path] = None) -> ExperimentResult:
        metrics = RunMetrics(config.experiment.value)
        log.info("experiment_started", experiment=config.experiment.value, trials=config.trials, seed=config.seed)
        result = self.handlers[config.experiment](config, metrics)
        result.metrics = metrics
        if write:
            result.written = self.write_outputs(config, result)
        if metrics_file is not None:
            metrics.export(metrics_file)
        log.info("experiment_finished", experiment=config.experiment.value, files=len(result.written))
        return result

    def write_outputs(self, config: SimConfig, result: ExperimentResult) -> List[Path]:
        directory = config.output.directory
        written = []
        for table in result.tables:
            path = write_table(directory, table)
            written.extend([path, write_sidecar(path, config)])
        for name, trace in result.traces.items():
            written.append(trace.to_csv(directory / "traces" / f"{name}.csv"))
        for trial, realization in result.channel_dumps.items():
            written.append(write_channel_dump(realization, directory / "channels" / f"trial{trial}.txt"))
        return written

    def _cond_cdf(self, config: SimConfig, metrics: RunMetrics) -> ExperimentResult:
        outcome = experiment_cond_cdf(config)
        metrics.trial_completed(config.trials - len(outcome.skipped))
        if outcome.skipped:
            metrics.degenerate_draw(len(outcome.skipped))
        return ExperimentResult(config.experiment, [outcome.table], skipped_trials=outcome.skipped)

    def _record_ser(self, config: SimConfig, metrics: RunMetrics, outcome: SerCurveResult) -> ExperimentResult:
        metrics.trial_completed(outcome.trials)
        if outcome.skipped:
            metrics.degenerate_draw(len(outcome.skipped))
        result = ExperimentResult(config.experiment, [outcome.table, outcome.convergence], skipped_trials=outcome.skipped)
        for trial, trial_outcome in outcome.outcomes:
            for label, count in trial_outcome.iterations.items():
                metrics.solver_run(label, count, trial_outcome.stagnations.get(label, 0))
            result.traces.update(trial_outcome.traces)
            if trial_outcome.realization is not None:
                result.channel_dumps[trial] = trial_outcome.realization
        return result

    def _ser_curve(self, config: SimConfig, metrics: RunMetrics) -> ExperimentResult:
        return self._record_ser(config, metrics, experiment_ser_vs_iter(config))

    def _est_error(self, config: SimConfig, metrics: RunMetrics) -> ExperimentResult:
        return self._record_ser(config, metrics, experiment_estimation_error(config))

    def _theory_check(self, config: SimConfig, metrics: RunMetrics) -> ExperimentResult:
        return ExperimentResult(config.experiment, [theory_check(config)])

    def _flops(self, config: SimConfig, metrics: RunMetrics) -> ExperimentResult:
        return ExperimentResult(config.experiment, [flops_report(config)])
