"""Stochastic channel generators for the four fading models.

Model 1: i.i.d. Rayleigh, CN(0, 1/M).
Model 2: near-field NLoS Rayleigh with distance-dependent path loss.
Model 3: near-field LoS Rician with spherical-wavefront phases.
Model 4: per-link mixture of Model 2/3 states with correlated LoS field and shadowing.

Any model picks up spatial correlation by replacing the small-scale fading
matrix with sqrt(R_bs) @ Omega @ sqrt(R_ue). Every generator finishes with
per-user normalisation ||H_k||_F^2 = N_k.
"""
from dataclasses import dataclass, field
from enum import IntEnum
from typing import List, Optional

import numpy as np
import structlog

from uwsvd.channels.geometry import FloatArray, Geometry, pairwise_distances
from uwsvd.errors import DegenerateChannelError, DimensionError, GeometryError, ValidationError
from uwsvd.linalg import ComplexMatrix, sqrt_psd

log = structlog.get_logger(__name__)


class ChannelModelId(IntEnum):
    MODEL1 = 1
    MODEL2 = 2
    MODEL3 = 3
    MODEL4 = 4


@dataclass(frozen=True)
class PropagationParams:
    beta_nlos: float = 0.020
    gamma_nlos: float = 1.765
    beta_los: float = 0.007
    gamma_los: float = 1.050
    kappa_db: float = 9.0
    corr_rho: float = 0.0
    corr_mu: Optional[float] = None

    def __post_init__(self):
        for name in ("beta_nlos", "gamma_nlos", "beta_los", "gamma_los"):
            if getattr(self, name) < 0:
                raise ValidationError(f"{name} must be non-negative")
        if not 0.0 <= self.corr_rho < 1.0:
            raise ValidationError(f"corr_rho must lie in [0, 1), got {self.corr_rho}")
        if self.corr_mu is not None and self.corr_mu < 0:
            raise ValidationError("corr_mu must be non-negative")

    @property
    def kappa(self) -> float:
        return float(10.0 ** (self.kappa_db / 10.0))

    def mu(self, wavelength: float) -> float:
        return self.corr_mu if self.corr_mu is not None else mu_from_rho(self.corr_rho, wavelength)


@dataclass(frozen=True)
class LosFieldParams:
    """Model 4 LoS/NLoS field: Markov chain along the service array."""

    los_probability: float = 0.7
    persistence_length: float = 10.0
    shadowing_sigma_db: float = 4.0
    kappa_mean_db: float = 9.0
    kappa_sigma_db: float = 10.0

    def __post_init__(self):
        if not 0.0 <= self.los_probability <= 1.0:
            raise ValidationError("los_probability must lie in [0, 1]")
        if self.persistence_length <= 0:
            raise ValidationError("persistence_length must be positive")
        if self.shadowing_sigma_db < 0 or self.kappa_sigma_db < 0:
            raise ValidationError("standard deviations must be non-negative")


@dataclass(frozen=True)
class ChannelRealization:
    h: ComplexMatrix
    partition: List[int]
    model_id: ChannelModelId
    corr_rho: float
    seed: Optional[int] = None
    los_state: Optional[np.ndarray] = field(default=None, repr=False)

    def user_block(self, k: int) -> ComplexMatrix:
        start = sum(self.partition[:k])
        return self.h[:, start : start + self.partition[k]]


def mu_from_rho(rho: float, wavelength: float) -> float:
    """Scaling factor giving correlation rho between antennas half a wavelength apart; 0 maps to mu=0."""
    if rho <= 0.0:
        return 0.0
    return -(wavelength / 2.0) / np.log(rho)


def exp_corr_matrix(pairwise: FloatArray, mu: float) -> ComplexMatrix:
    d = np.asarray(pairwise, dtype=float)
    if d.ndim != 2 or d.shape[0] != d.shape[1]:
        raise DimensionError("pairwise distances must form a square matrix")
    if np.any(d < 0):
        raise ValidationError("distances must be non-negative")
    if not np.allclose(d, d.T) or np.any(np.diag(d) != 0):
        raise ValidationError("distance matrix must be symmetric with zero diagonal")
    if mu < 0:
        raise ValidationError("mu must be non-negative")
    if mu == 0:
        return np.eye(d.shape[0], dtype=np.complex128)
    return np.exp(-d / mu).astype(np.complex128)


def gen_iid_rayleigh(m: int, n: int, rng: np.random.Generator) -> ComplexMatrix:
    """Entries CN(0, 1/m)."""
    if m < 1 or n < 1:
        raise DimensionError(f"invalid channel size {m}x{n}")
    scale = np.sqrt(0.5 / m)
    return scale * (rng.standard_normal((m, n)) + 1j * rng.standard_normal((m, n)))


def apply_kronecker(omega, r_bs, r_ue) -> ComplexMatrix:
    omega = np.asarray(omega, dtype=np.complex128)
    m, n = omega.shape
    if np.shape(r_bs) != (m, m) or np.shape(r_ue) != (n, n):
        raise DimensionError(f"correlation shapes {np.shape(r_bs)}, {np.shape(r_ue)} do not match {m}x{n}")
    return _sandwich(omega, sqrt_psd(r_bs), sqrt_psd(r_ue))


def _sandwich(omega, root_bs, root_ue) -> ComplexMatrix:
    out = omega
    if root_bs is not None:
        out = root_bs @ out
    if root_ue is not None:
        out = out @ root_ue
    return out


def normalize_per_user(h: ComplexMatrix, partition: List[int]) -> ComplexMatrix:
    if sum(partition) != h.shape[1]:
        raise DimensionError(f"partition {partition} does not sum to {h.shape[1]} columns")
    out = np.array(h, dtype=np.complex128, copy=True)
    start = 0
    for k, n_k in enumerate(partition):
        block = out[:, start : start + n_k]
        energy = np.vdot(block, block).real
        if energy <= 0 or not np.isfinite(energy):
            raise DegenerateChannelError(f"user {k} has zero channel gain", user=k)
        out[:, start : start + n_k] = block * np.sqrt(n_k / energy)
        start += n_k
    return out


def add_estimation_error(h, varpi_db: float, rng: np.random.Generator) -> ComplexMatrix:
    """H + Z with per-entry noise power = mean |H_mn|^2 / 10^(varpi/10)."""
    h = np.asarray(h, dtype=np.complex128)
    if varpi_db is None or np.isposinf(varpi_db):
        return h.copy()
    if not np.isfinite(varpi_db):
        raise ValidationError(f"varpi_db must be finite or +inf, got {varpi_db}")
    power = np.mean(np.abs(h) ** 2)
    variance = power / 10.0 ** (varpi_db / 10.0)
    noise = np.sqrt(variance / 2.0) * (rng.standard_normal(h.shape) + 1j * rng.standard_normal(h.shape))
    return h + noise


class ChannelGenerator:
    """Caches geometry-dependent quantities so repeated draws only pay for randomness."""

    def __init__(
        self,
        geometry: Geometry,
        params: PropagationParams = PropagationParams(),
        los_field: LosFieldParams = LosFieldParams(),
    ):
        self.geometry = geometry
        self.params = params
        self.los_field = los_field
        self.partition = geometry.partition
        self.m = geometry.m
        self.n = sum(self.partition)

        self.distances = geometry.link_distances()
        if np.any(self.distances <= 0):
            raise GeometryError("a user antenna coincides with a service antenna")

        mu = params.mu(geometry.wavelength)
        if mu > 0:
            self.root_bs = sqrt_psd(exp_corr_matrix(pairwise_distances(geometry.service_positions), mu))
            self.root_ue = sqrt_psd(exp_corr_matrix(pairwise_distances(geometry.all_user_positions), mu))
        else:
            self.root_bs = None
            self.root_ue = None

        self.gain_nlos = params.beta_nlos / self.distances ** params.gamma_nlos
        self.gain_los = params.beta_los / self.distances ** params.gamma_los
        self.los_phase = np.exp(-2j * np.pi * self.distances / geometry.wavelength)
        log.debug("channel_generator_ready", m=self.m, n=self.n, corr_rho=params.corr_rho, mu=mu)

    def fading(self, rng: np.random.Generator, unit_variance: bool) -> ComplexMatrix:
        omega = gen_iid_rayleigh(self.m, self.n, rng)
        if unit_variance:
            omega = omega * np.sqrt(self.m)
        return _sandwich(omega, self.root_bs, self.root_ue)

    def _rician(self, omega: ComplexMatrix, kappa) -> ComplexMatrix:
        kappa = np.asarray(kappa, dtype=float)
        los = np.sqrt(kappa / (kappa + 1.0)) * self.los_phase
        scatter = np.sqrt(1.0 / (kappa + 1.0)) * omega
        return self.gain_los * (los + scatter)

    def _finish(self, h, model_id, seed, los_state=None) -> ChannelRealization:
        return ChannelRealization(
            h=normalize_per_user(h, self.partition),
            partition=list(self.partition),
            model_id=model_id,
            corr_rho=self.params.corr_rho,
            seed=seed,
            los_state=los_state,
        )

    def model1(self, rng, seed=None) -> ChannelRealization:
        return self._finish(self.fading(rng, unit_variance=False), ChannelModelId.MODEL1, seed)

    def model2(self, rng, seed=None) -> ChannelRealization:
        return self._finish(self.gain_nlos * self.fading(rng, unit_variance=True), ChannelModelId.MODEL2, seed)

    def model3(self, rng, seed=None) -> ChannelRealization:
        h = self._rician(self.fading(rng, unit_variance=True), self.params.kappa)
        return self._finish(h, ChannelModelId.MODEL3, seed)

    def model4(self, rng, seed=None) -> ChannelRealization:
        field_params = self.los_field
        omega = self.fading(rng, unit_variance=True)
        state = self.los_states(rng)

        kappa_db = field_params.kappa_mean_db + field_params.kappa_sigma_db * rng.standard_normal(len(self.partition))
        kappa_cols = np.repeat(10.0 ** (kappa_db / 10.0), self.partition)[np.newaxis, :]

        los = self._rician(omega, kappa_cols)
        nlos = self.gain_nlos * omega
        h = np.where(state, los, nlos) * self.shadowing(rng)
        return self._finish(h, ChannelModelId.MODEL4, seed, los_state=state)

    def los_states(self, rng: np.random.Generator) -> np.ndarray:
        """Binary LoS states, one stationary two-state Markov chain per user antenna along the array."""
        p = self.los_field.los_probability
        keep = np.exp(-1.0 / self.los_field.persistence_length)
        stay_los = p + (1.0 - p) * keep
        enter_los = p * (1.0 - keep)

        draws = rng.random((self.m, self.n))
        state = np.empty((self.m, self.n), dtype=bool)
        state[0] = draws[0] < p
        for row in range(1, self.m):
            threshold = np.where(state[row - 1], stay_los, enter_los)
            state[row] = draws[row] < threshold
        return state

    def shadowing(self, rng: np.random.Generator) -> np.ndarray:
        """Lognormal amplitude, moving-average smoothed along the array with unit-variance normalisation."""
        sigma = self.los_field.shadowing_sigma_db
        window = max(int(round(self.los_field.persistence_length)), 1)
        white = rng.standard_normal((self.m + window - 1, self.n))
        kernel = np.ones(window) / np.sqrt(window)
        smoothed = np.apply_along_axis(lambda col: np.convolve(col, kernel, mode="valid"), 0, white)
        if sigma == 0:
            return np.ones((self.m, self.n))
        return 10.0 ** (sigma * smoothed / 20.0)

    def draw(self, model_id: ChannelModelId, rng: np.random.Generator, seed: Optional[int] = None) -> ChannelRealization:
        dispatch = {
            ChannelModelId.MODEL1: self.model1,
            ChannelModelId.MODEL2: self.model2,
            ChannelModelId.MODEL3: self.model3,
            ChannelModelId.MODEL4: self.model4,
        }
        return dispatch[ChannelModelId(model_id)](rng, seed)


def gen_model1(geometry: Geometry, params: PropagationParams, rng) -> ChannelRealization:
    return ChannelGenerator(geometry, params).model1(rng)


def gen_model2(geometry: Geometry, params: PropagationParams, rng) -> ChannelRealization:
    return ChannelGenerator(geometry, params).model2(rng)


def gen_model3(geometry: Geometry, params: PropagationParams, rng) -> ChannelRealization:
    return ChannelGenerator(geometry, params).model3(rng)


def gen_model4(geometry: Geometry, params: PropagationParams, los_field_params: LosFieldParams, rng) -> ChannelRealization:
    return ChannelGenerator(geometry, params, los_field_params).model4(rng)
