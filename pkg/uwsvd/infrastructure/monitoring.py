from pathlib import Path
from typing import Dict, Optional

from prometheus_client import CollectorRegistry, Counter, write_to_textfile

FLOP_BUCKETS = ("gram_build", "matrix_inverse", "per_iteration", "uw_svd_overhead", "matched_filter")


class FlopCounter:
    """Bucketed multiply-accumulate counter; one complex MAC counts as 1."""

    def __init__(self):
        self.metrics: Dict[str, float] = {name: 0.0 for name in FLOP_BUCKETS}

    def collect_metric(self, name: str, value: float):
        if name not in self.metrics:
            raise KeyError(f"unknown flop bucket '{name}'")
        self.metrics[name] += float(value)

    def get_metrics(self) -> Dict[str, float]:
        return dict(self.metrics)

    @property
    def total(self) -> float:
        return sum(self.metrics.values())

    def reset(self, name: Optional[str] = None):
        for key in self.metrics:
            if name is None or key == name:
                self.metrics[key] = 0.0


def charge(counter: Optional[FlopCounter], name: str, value: float):
    if counter is not None:
        counter.collect_metric(name, value)


class RunMetrics:
    """Per-run Prometheus counters kept on a private registry."""

    def __init__(self, experiment: str):
        self.registry = CollectorRegistry()
        self.experiment = experiment
        self.trials = Counter(
            "uwsvd_trials_completed", "Monte Carlo trials completed", ["experiment"], registry=self.registry
        )
        self.degenerate = Counter(
            "uwsvd_degenerate_draws", "Trials skipped as degenerate or numerically failed", ["experiment"],
            registry=self.registry,
        )
        self.stagnations = Counter(
            "uwsvd_solver_stagnations", "Solver steps flagged as stagnated", ["experiment", "solver"],
            registry=self.registry,
        )
        self.iterations = Counter(
            "uwsvd_solver_iterations", "Solver iterations executed", ["experiment", "solver"], registry=self.registry
        )

    def trial_completed(self, count: int = 1):
        self.trials.labels(self.experiment).inc(count)

    def degenerate_draw(self, count: int = 1):
        self.degenerate.labels(self.experiment).inc(count)

    def solver_run(self, solver: str, iterations: int, stagnations: int):
        self.iterations.labels(self.experiment, solver).inc(iterations)
        if stagnations:
            self.stagnations.labels(self.experiment, solver).inc(stagnations)

    def value(self, name: str, **labels) -> float:
        sample = self.registry.get_sample_value(f"{name}_total", {"experiment": self.experiment, **labels})
        return sample or 0.0

    def export(self, path: Path):
        path.parent.mkdir(parents=True, exist_ok=True)
        write_to_textfile(str(path), self.registry)
