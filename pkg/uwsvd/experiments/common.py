"""Seeding, trial fan-out and summary statistics shared by the experiments."""
from concurrent.futures import ProcessPoolExecutor
from enum import IntEnum
from functools import partial
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple, TypeVar

import numpy as np
import numpy.typing as npt
import structlog

from uwsvd.channels import ChannelGenerator
from uwsvd.errors import DegenerateChannelError, NumericalError, ValidationError

log = structlog.get_logger(__name__)

T = TypeVar("T")


class Stream(IntEnum):
    """Independent RNG streams inside one trial."""

    CHANNEL = 0
    SYMBOLS = 1
    NOISE = 2
    ESTIMATION = 3


def derive_rng(seed: int, trial: int, stream: int = Stream.CHANNEL, *extra: int) -> np.random.Generator:
    """Generator for (seed, trial, stream, ...) that does not depend on scheduling order."""
    key = (int(trial), int(stream)) + tuple(int(e) for e in extra)
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=key))


def _guarded(func: Callable[..., T], trial: int, *args: Any) -> Tuple[int, Optional[T], Optional[str]]:
    try:
        return trial, func(trial, *args), None
    except (DegenerateChannelError, NumericalError) as exc:
        return trial, None, str(exc)


def run_trials(
    func: Callable[..., T], trials: int, workers: int = 1, *args: Any
) -> Tuple[List[Tuple[int, T]], List[int]]:
    """Run func(trial, *args) for every trial; returns (ok results sorted by trial, skipped trials).

    Degenerate draws and numerical failures are skipped rather than aborting the experiment.
    """
    task = partial(_guarded, func)
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(task, range(trials), *[[a] * trials for a in args]))
    else:
        outcomes = [task(t, *args) for t in range(trials)]

    results, skipped = [], []
    for trial, value, reason in sorted(outcomes, key=lambda item: item[0]):
        if value is None:
            skipped.append(trial)
            log.info("trial_skipped", trial=trial, reason=reason)
        else:
            results.append((trial, value))
    return results, skipped


def converged_at(curve: Sequence[float], exact: float, factor: float = 1.05) -> Optional[int]:
    """First 1-based iteration whose SER is within factor of the exact detector's SER."""
    if factor < 1.0:
        raise ValidationError("convergence factor must be >= 1")
    for t, value in enumerate(curve, start=1):
        if value <= factor * exact:
            return t
    return None


def empirical_cdf(values: Sequence[float]) -> Tuple[npt.NDArray[np.float64], npt.NDArray[np.float64]]:
    ordered = np.sort(np.asarray(values, dtype=float))
    n = ordered.size
    if n == 0:
        raise ValidationError("empirical_cdf needs at least one value")
    return ordered, np.arange(1, n + 1) / n


_GENERATOR_CACHE: Dict[str, ChannelGenerator] = {}


def generator_for(config) -> ChannelGenerator:
    """Per-process cache: geometry, correlation roots and path loss only depend on system/channel."""
    key = config.model_dump_json(include={"system", "channel"})
    generator = _GENERATOR_CACHE.get(key)
    if generator is None:
        generator = ChannelGenerator(
            config.system.build_geometry(),
            config.channel.propagation_params(),
            config.channel.los_field_params(),
        )
        _GENERATOR_CACHE[key] = generator
    return generator
