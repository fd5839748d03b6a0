"""Plain-text channel dumps for cross-implementation comparison.

Line 1: ``M N K N_ue model seed`` (seed -1 when unknown), then one ``re im`` pair
per entry in row-major order.
"""
from pathlib import Path
from typing import Union

import numpy as np
import structlog

from uwsvd.channels.models import ChannelModelId, ChannelRealization
from uwsvd.errors import DimensionError, ValidationError

log = structlog.get_logger(__name__)


def write_channel_dump(realization: ChannelRealization, path: Union[str, Path]) -> Path:
    partition = realization.partition
    if len(set(partition)) != 1:
        raise DimensionError(f"dump format needs equal antennas per user, got {partition}")
    m, n = realization.h.shape
    seed = -1 if realization.seed is None else int(realization.seed)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)

    lines = [f"{m} {n} {len(partition)} {partition[0]} {int(realization.model_id)} {seed}"]
    lines.extend(f"{z.real:.17g} {z.imag:.17g}" for z in realization.h.ravel())
    path.write_text("\n".join(lines) + "\n")
    log.debug("channel_dump_written", path=str(path), m=m, n=n)
    return path


def read_channel_dump(path: Union[str, Path]) -> ChannelRealization:
    with open(path) as handle:
        header = handle.readline().split()
        if len(header) != 6:
            raise ValidationError(f"{path}: header must hold 'M N K N_ue model seed'")
        m, n, k_users, n_ue, model, seed = (int(v) for v in header)
        if k_users * n_ue != n:
            raise DimensionError(f"{path}: K*N_ue={k_users * n_ue} does not match N={n}")
        values = np.loadtxt(handle, dtype=float, ndmin=2)

    if values.shape != (m * n, 2):
        raise DimensionError(f"{path}: expected {m * n} 're im' rows, found {values.shape[0]}")
    h = (values[:, 0] + 1j * values[:, 1]).reshape(m, n)
    return ChannelRealization(
        h=h,
        partition=[n_ue] * k_users,
        model_id=ChannelModelId(model),
        corr_rho=float("nan"),
        seed=None if seed < 0 else seed,
    )
