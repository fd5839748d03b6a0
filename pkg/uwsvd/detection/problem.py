"""Detection problems A x = b (original coordinates) and Phi s = delta (e-signal).

Gram matrices are exposed as operators: matvec-only solvers never build them,
while GS/SSOR and the exact detectors ask for an explicit materialization.
"""
from abc import ABC, abstractmethod
from dataclasses import dataclass, replace
from enum import Enum
from typing import Optional, Sequence

import numpy as np
import numpy.typing as npt
import scipy.linalg as sla

from uwsvd.channels.models import gen_iid_rayleigh, normalize_per_user
from uwsvd.detection.uw_svd import UwSvdFactors, post_process
from uwsvd.errors import DimensionError, NumericalError, ValidationError
from uwsvd.infrastructure.monitoring import FlopCounter, charge
from uwsvd.linalg import ComplexMatrix, ComplexVector, as_complex_matrix, sqrt_psd


EXACT_RESIDUAL_TOL = 1e-9


class DetectorMode(str, Enum):
    ZF = "zf"
    LMMSE = "lmmse"


class Coordinates(str, Enum):
    ORIGINAL = "orig"
    ESIGNAL = "uwsvd"


class GramOperator(ABC):
    """Hermitian PSD operator G of size N."""

    unit_diagonal: bool = False

    @property
    @abstractmethod
    def size(self) -> int:
        pass

    @abstractmethod
    def matvec(self, v: ComplexVector, counter: Optional[FlopCounter] = None) -> ComplexVector:
        pass

    @abstractmethod
    def materialize(self, counter: Optional[FlopCounter] = None) -> "DenseGram":
        pass

    @abstractmethod
    def diagonal(self, counter: Optional[FlopCounter] = None) -> npt.NDArray[np.float64]:
        pass

    def lower(self, counter: Optional[FlopCounter] = None) -> ComplexMatrix:
        """L(G): lower triangle including the diagonal."""
        return np.tril(self.materialize(counter).matrix)


class FactoredGram(GramOperator):
    """G = F^H F + diag(shift), applied in two passes without forming F^H F."""

    def __init__(self, factor: ComplexMatrix, shift: Optional[np.ndarray] = None, unit_diagonal: bool = False):
        self.factor = factor
        self.shift = None if shift is None else np.asarray(shift, dtype=float)
        self.unit_diagonal = unit_diagonal and self.shift is None
        if self.shift is not None and self.shift.shape != (factor.shape[1],):
            raise DimensionError("shift length must equal the number of columns")

    @property
    def size(self) -> int:
        return self.factor.shape[1]

    def matvec(self, v, counter=None):
        m, n = self.factor.shape
        out = self.factor.conj().T @ (self.factor @ v)
        cost = 2 * m * n
        if self.shift is not None:
            out = out + self.shift * v
            cost += n
        charge(counter, "per_iteration", cost)
        return out

    def materialize(self, counter=None):
        m, n = self.factor.shape
        gram = self.factor.conj().T @ self.factor
        if self.shift is not None:
            gram = gram + np.diag(self.shift)
        charge(counter, "gram_build", m * n * n)
        return DenseGram(0.5 * (gram + gram.conj().T), unit_diagonal=self.unit_diagonal)

    def diagonal(self, counter=None):
        # Psi has unit-norm columns, so diag(Psi^H Psi) is known for free.
        if self.unit_diagonal:
            return np.ones(self.size)
        m, n = self.factor.shape
        charge(counter, "gram_build", m * n)
        diag = np.einsum("ij,ij->j", self.factor.conj(), self.factor).real
        return diag if self.shift is None else diag + self.shift


class DenseGram(GramOperator):
    def __init__(self, matrix: ComplexMatrix, unit_diagonal: bool = False):
        self.matrix = np.asarray(matrix, dtype=np.complex128)
        self.unit_diagonal = unit_diagonal

    @property
    def size(self) -> int:
        return self.matrix.shape[0]

    def matvec(self, v, counter=None):
        charge(counter, "per_iteration", self.size * self.size)
        return self.matrix @ v

    def materialize(self, counter=None):
        return self

    def diagonal(self, counter=None):
        if self.unit_diagonal:
            return np.ones(self.size)
        return np.diag(self.matrix).real.copy()


@dataclass(frozen=True)
class DetectionProblem:
    operator: GramOperator
    rhs: ComplexVector
    mode: DetectorMode
    coords: Coordinates
    rho: Optional[float] = None
    factors: Optional[UwSvdFactors] = None

    @property
    def size(self) -> int:
        return self.operator.size

    @property
    def regularizer(self) -> Optional[np.ndarray]:
        if self.mode is DetectorMode.ZF:
            return None
        if self.coords is Coordinates.ESIGNAL:
            return 1.0 / (self.rho * self.factors.sigma**2)
        return np.full(self.size, 1.0 / self.rho)

    def materialized(self, counter: Optional[FlopCounter] = None) -> "DetectionProblem":
        return replace(self, operator=self.operator.materialize(counter))

    def residual(self, x: ComplexVector) -> ComplexVector:
        """b - G x, uncounted (tracing only)."""
        return self.rhs - self.operator.matvec(x)


@dataclass(frozen=True)
class Estimate:
    x_hat: ComplexVector
    coords: Coordinates
    post_processed: bool = False


def _shift_for(mode: DetectorMode, rho: Optional[float], scale: np.ndarray) -> Optional[np.ndarray]:
    mode = DetectorMode(mode)
    if mode is DetectorMode.ZF:
        return None
    if rho is None or not rho > 0:
        raise ValidationError(f"LMMSE detection needs rho > 0, got {rho}")
    return scale / rho


def build_problem_original(
    h, y, mode: DetectorMode, rho: Optional[float] = None, counter: Optional[FlopCounter] = None
) -> DetectionProblem:
    h = as_complex_matrix(h, "h")
    y = np.asarray(y, dtype=np.complex128)
    m, n = h.shape
    if y.shape != (m,):
        raise DimensionError(f"y has shape {y.shape}, expected ({m},)")
    rhs = h.conj().T @ y
    charge(counter, "matched_filter", m * n)
    shift = _shift_for(mode, rho, np.ones(n))
    return DetectionProblem(
        operator=FactoredGram(h, shift),
        rhs=rhs,
        mode=DetectorMode(mode),
        coords=Coordinates.ORIGINAL,
        rho=rho,
    )


def build_problem_esignal(
    factors: UwSvdFactors, y, mode: DetectorMode, rho: Optional[float] = None, counter: Optional[FlopCounter] = None
) -> DetectionProblem:
    factors.require_sigma_floor()
    y = np.asarray(y, dtype=np.complex128)
    m, n = factors.psi.shape
    if y.shape != (m,):
        raise DimensionError(f"y has shape {y.shape}, expected ({m},)")
    rhs = factors.psi.conj().T @ y
    charge(counter, "matched_filter", m * n)
    shift = _shift_for(mode, rho, 1.0 / factors.sigma**2)
    return DetectionProblem(
        operator=FactoredGram(factors.psi, shift, unit_diagonal=True),
        rhs=rhs,
        mode=DetectorMode(mode),
        coords=Coordinates.ESIGNAL,
        rho=rho,
        factors=factors,
    )


def exact_solve(problem: DetectionProblem, counter: Optional[FlopCounter] = None) -> ComplexVector:
    """Cholesky solve of the materialized Gram matrix."""
    gram = problem.operator.materialize(counter).matrix
    n = gram.shape[0]
    try:
        chol = sla.cho_factor(gram, lower=True, check_finite=False)
        x = sla.cho_solve(chol, problem.rhs, check_finite=False)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"Gram matrix is not positive definite: {exc}") from exc
    charge(counter, "matrix_inverse", n**3)

    b_norm = np.linalg.norm(problem.rhs)
    residual = np.linalg.norm(gram @ x - problem.rhs)
    if residual > EXACT_RESIDUAL_TOL * b_norm:
        raise NumericalError("exact solve residual above tolerance", residual=float(residual / b_norm))
    return x


def to_estimate(
    problem: DetectionProblem, solution: ComplexVector, counter: Optional[FlopCounter] = None
) -> Estimate:
    if problem.coords is Coordinates.ESIGNAL:
        return Estimate(x_hat=post_process(problem.factors, solution, counter), coords=problem.coords, post_processed=True)
    return Estimate(x_hat=np.asarray(solution, dtype=np.complex128), coords=problem.coords)


def block_orthogonal_channel(
    m: int, partition: Sequence[int], rho_corr: float, rng: np.random.Generator
) -> ComplexMatrix:
    """Users on disjoint service-antenna rows, so H_k^H H_j = 0 for k != j.

    Inside a block the user antennas are correlated as rho_corr^|i-j|, which keeps
    H_k^H H_k ill-conditioned while Psi^H Psi is exactly the identity.
    """
    parts = [int(p) for p in partition]
    k_users = len(parts)
    rows = m // k_users if k_users else 0
    if k_users == 0 or any(rows < p for p in parts):
        raise DimensionError(f"M={m} cannot give {k_users} users disjoint supports for partition {parts}")
    if not 0.0 <= rho_corr < 1.0:
        raise ValidationError("rho_corr must lie in [0, 1)")

    h = np.zeros((m, sum(parts)), dtype=np.complex128)
    col = 0
    for k, n_k in enumerate(parts):
        lag = np.abs(np.subtract.outer(np.arange(n_k), np.arange(n_k)))
        root = sqrt_psd((rho_corr**lag).astype(np.complex128))
        h[k * rows : (k + 1) * rows, col : col + n_k] = gen_iid_rayleigh(rows, n_k, rng) @ root
        col += n_k
    return normalize_per_user(h, parts)
