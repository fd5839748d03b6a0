"""User-wise SVD: H = Psi diag(sigma) blockdiag(V_k)^H with Psi = [U_1, ..., U_K]."""
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
import numpy.typing as npt
import scipy.linalg as sla

from uwsvd.errors import DegenerateChannelError, DimensionError
from uwsvd.infrastructure.monitoring import FlopCounter, charge
from uwsvd.linalg import ComplexMatrix, ComplexVector, as_complex_matrix, economy_svd

SIGMA_FLOOR_RATIO = 1e-12


@dataclass(frozen=True)
class UwSvdFactors:
    psi: ComplexMatrix
    sigma: npt.NDArray[np.float64]
    v_blocks: Tuple[ComplexMatrix, ...]
    partition: Tuple[int, ...]

    @property
    def offsets(self) -> List[int]:
        return [0] + list(np.cumsum(self.partition))

    def v(self) -> ComplexMatrix:
        return sla.block_diag(*self.v_blocks)

    def reconstruct(self) -> ComplexMatrix:
        return (self.psi * self.sigma) @ self.v().conj().T

    def require_sigma_floor(self):
        floor = SIGMA_FLOOR_RATIO * self.sigma.max()
        low = np.flatnonzero(self.sigma < floor)
        if low.size:
            user = int(np.searchsorted(self.offsets, low[0], side="right") - 1)
            raise DegenerateChannelError(
                f"singular value {self.sigma[low[0]]:.3e} below floor {floor:.3e}",
                user=user,
                ratio=float(self.sigma[low[0]] / self.sigma.max()),
            )


def _check_partition(n: int, partition: Sequence[int]) -> Tuple[int, ...]:
    parts = tuple(int(p) for p in partition)
    if not parts or any(p < 1 for p in parts) or sum(parts) != n:
        raise DimensionError(f"partition {list(parts)} does not split {n} columns")
    return parts


def uw_svd(h, partition: Sequence[int], counter: Optional[FlopCounter] = None) -> UwSvdFactors:
    h = as_complex_matrix(h, "h")
    m, n = h.shape
    parts = _check_partition(n, partition)
    if any(m < p for p in parts):
        raise DimensionError(f"M={m} is smaller than a user block in {list(parts)}")

    u_blocks, sigmas, v_blocks = [], [], []
    start = 0
    for k, n_k in enumerate(parts):
        svd = economy_svd(h[:, start : start + n_k])
        s = svd.singular_values
        ratio = float(s[-1] / s[0]) if s[0] > 0 else 0.0
        if ratio < SIGMA_FLOOR_RATIO:
            raise DegenerateChannelError(f"user {k} sub-channel is rank deficient", user=k, ratio=ratio)
        u_blocks.append(svd.u)
        sigmas.append(s)
        v_blocks.append(svd.v)
        charge(counter, "uw_svd_overhead", m * n_k * n_k)
        start += n_k

    return UwSvdFactors(
        psi=np.hstack(u_blocks),
        sigma=np.concatenate(sigmas),
        v_blocks=tuple(v_blocks),
        partition=parts,
    )


def post_process(factors: UwSvdFactors, s_hat, counter: Optional[FlopCounter] = None) -> ComplexVector:
    """x_hat = V Sigma^-1 s_hat, one block at a time."""
    s_hat = np.asarray(s_hat, dtype=np.complex128)
    if s_hat.shape != factors.sigma.shape:
        raise DimensionError(f"s_hat has shape {s_hat.shape}, expected {factors.sigma.shape}")
    factors.require_sigma_floor()

    scaled = s_hat / factors.sigma
    offsets = factors.offsets
    x_hat = np.empty_like(scaled)
    for k, v_k in enumerate(factors.v_blocks):
        x_hat[offsets[k] : offsets[k + 1]] = v_k @ scaled[offsets[k] : offsets[k + 1]]
    charge(counter, "uw_svd_overhead", sum(p * p for p in factors.partition) + 2 * scaled.size)
    return x_hat
