"""Square QAM with per-axis Gray labelling, AWGN transmission and SER."""
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence

import numpy as np
import numpy.typing as npt

from uwsvd.errors import DimensionError, ValidationError
from uwsvd.linalg import ComplexMatrix, ComplexVector

SUPPORTED_ORDERS = (4, 16, 64)
IndexVector = npt.NDArray[np.int64]


def _gray_to_binary_table(levels: int) -> np.ndarray:
    table = np.empty(levels, dtype=np.int64)
    for value in range(levels):
        table[value ^ (value >> 1)] = value
    return table


@dataclass(frozen=True)
class Constellation:
    """Unit-average-energy square QAM.

    Symbol index = (I-axis Gray label << bits_per_axis) | Q-axis Gray label, and an
    axis label g maps to amplitude (L - 1) - 2 * gray_to_binary(g) for L levels.
    """

    order: int
    points: ComplexVector = field(repr=False)

    @classmethod
    def qam(cls, order: int) -> "Constellation":
        return _build_qam(int(order))

    @property
    def bits_per_symbol(self) -> int:
        return int(np.log2(self.order))

    @property
    def scale(self) -> float:
        return float(1.0 / np.sqrt(2.0 * (self.order - 1) / 3.0))

    @property
    def min_distance(self) -> float:
        return 2.0 * self.scale


@lru_cache(maxsize=None)
def _build_qam(order: int) -> Constellation:
    if order not in SUPPORTED_ORDERS:
        raise ValidationError(f"QAM order must be one of {SUPPORTED_ORDERS}, got {order}")
    levels = int(round(np.sqrt(order)))
    bits = levels.bit_length() - 1
    to_binary = _gray_to_binary_table(levels)

    index = np.arange(order)
    in_phase = (levels - 1) - 2 * to_binary[index >> bits]
    quadrature = (levels - 1) - 2 * to_binary[index & (levels - 1)]
    scale = 1.0 / np.sqrt(2.0 * (order - 1) / 3.0)
    points = (in_phase + 1j * quadrature) * scale
    points.setflags(write=False)
    return Constellation(order=order, points=points)


@dataclass(frozen=True)
class SnrSpec:
    """rho = sigma_x^2 / sigma_z^2 in dB; +inf means noiseless."""

    rho_db: float
    signal_power: float = 1.0

    def __post_init__(self):
        if np.isnan(self.rho_db) or np.isneginf(self.rho_db):
            raise ValidationError(f"rho_db must be finite or +inf, got {self.rho_db}")
        if self.signal_power <= 0:
            raise ValidationError("signal_power must be positive")

    @property
    def rho_linear(self) -> float:
        return float(10.0 ** (self.rho_db / 10.0))

    @property
    def sigma_z_sq(self) -> float:
        if np.isposinf(self.rho_db):
            return 0.0
        return self.signal_power / self.rho_linear


def modulate(symbol_indices: Sequence[int], constellation: Constellation) -> ComplexVector:
    idx = np.asarray(symbol_indices)
    if idx.size and (not np.issubdtype(idx.dtype, np.integer) or idx.min() < 0 or idx.max() >= constellation.order):
        raise ValidationError(f"symbol indices must be integers in [0, {constellation.order})")
    return constellation.points[idx.astype(np.int64)]


def demodulate_hard(estimates, constellation: Constellation) -> IndexVector:
    """Nearest point; argmin returns the first minimum so ties go to the smaller index."""
    est = np.asarray(estimates, dtype=np.complex128).ravel()
    if not np.all(np.isfinite(est)):
        raise ValidationError("estimates must be finite")
    distance = np.abs(est[:, np.newaxis] - constellation.points[np.newaxis, :]) ** 2
    return np.argmin(distance, axis=1).astype(np.int64)


def transmit(h: ComplexMatrix, x: ComplexVector, snr: SnrSpec, rng: np.random.Generator) -> ComplexVector:
    h = np.asarray(h)
    x = np.asarray(x)
    if h.ndim != 2 or x.ndim != 1 or h.shape[1] != x.shape[0]:
        raise DimensionError(f"cannot transmit {x.shape} symbols through a {h.shape} channel")
    y = h @ x
    variance = snr.sigma_z_sq
    if variance == 0.0:
        return y
    m = h.shape[0]
    return y + np.sqrt(variance / 2.0) * (rng.standard_normal(m) + 1j * rng.standard_normal(m))


def symbol_error_rate(decided, truth) -> float:
    decided = np.asarray(decided)
    truth = np.asarray(truth)
    if decided.shape != truth.shape:
        raise ValidationError(f"length mismatch: {decided.shape} vs {truth.shape}")
    if decided.size == 0:
        return 0.0
    return float(np.count_nonzero(decided != truth)) / decided.size


def random_indices(n: int, order: int, rng: np.random.Generator) -> IndexVector:
    return rng.integers(0, order, size=n, dtype=np.int64)
