"""Dense complex linear algebra primitives.

All matrices are numpy complex128 arrays; the heavy lifting is LAPACK through
scipy.linalg, wrapped with the validation, phase conventions and error types
the rest of the package relies on.
"""
from dataclasses import dataclass
from typing import Tuple

import numpy as np
import numpy.typing as npt
import scipy.linalg as sla

from uwsvd.errors import DimensionError, NumericalError, SingularMatrixError, ValidationError

ComplexMatrix = npt.NDArray[np.complex128]
ComplexVector = npt.NDArray[np.complex128]

RECONSTRUCTION_TOL = 1e-10
HERMITIAN_TOL = 1e-10
EIGEN_CLAMP_FLOOR = 1e-12
SINGULAR_FLOOR = 1e-14


@dataclass(frozen=True)
class EconomySvd:
    u: ComplexMatrix
    singular_values: npt.NDArray[np.float64]
    v: ComplexMatrix

    def reconstruct(self) -> ComplexMatrix:
        return (self.u * self.singular_values) @ self.v.conj().T


@dataclass(frozen=True)
class EigenExtremes:
    lambda_min: float
    lambda_max: float

    @property
    def ratio(self) -> float:
        return self.lambda_max / self.lambda_min


def as_complex_matrix(a, name: str = "matrix") -> ComplexMatrix:
    arr = np.asarray(a, dtype=np.complex128)
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise DimensionError(f"{name} must be a non-empty 2-D array, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValidationError(f"{name} has non-finite entries")
    return arr


def is_hermitian(a: ComplexMatrix, tol: float = HERMITIAN_TOL) -> bool:
    if a.shape[0] != a.shape[1]:
        return False
    scale = max(np.linalg.norm(a), 1.0)
    return np.linalg.norm(a - a.conj().T) <= tol * scale


def _require_hermitian(a, name: str) -> ComplexMatrix:
    arr = as_complex_matrix(a, name)
    if arr.shape[0] != arr.shape[1]:
        raise DimensionError(f"{name} must be square, got shape {arr.shape}")
    if not is_hermitian(arr):
        raise ValidationError(f"{name} is not Hermitian within tolerance")
    return arr


def economy_svd(a) -> EconomySvd:
    """Thin SVD of a tall matrix with a deterministic phase convention.

    Each column of u has its first entry of non-negligible magnitude made real
    and non-negative; the removed phase is pushed into the matching column of v.
    """
    arr = as_complex_matrix(a)
    rows, cols = arr.shape
    if rows < cols:
        raise DimensionError(f"economy_svd needs rows >= cols, got {rows}x{cols}")
    try:
        u, s, vh = sla.svd(arr, full_matrices=False, lapack_driver="gesdd")
    except (np.linalg.LinAlgError, ValueError):
        try:
            u, s, vh = sla.svd(arr, full_matrices=False, lapack_driver="gesvd")
        except (np.linalg.LinAlgError, ValueError) as exc:
            raise NumericalError(f"SVD failed to converge: {exc}", residual=float("nan")) from exc
    v = vh.conj().T

    for j in range(cols):
        column = u[:, j]
        magnitude = np.abs(column)
        pivot = int(np.argmax(magnitude > 1e-12 * magnitude.max())) if magnitude.max() > 0 else 0
        if magnitude[pivot] > 0:
            phase = column[pivot] / magnitude[pivot]
            u[:, j] = column * np.conj(phase)
            v[:, j] = v[:, j] * np.conj(phase)

    result = EconomySvd(u=u, singular_values=s, v=v)
    norm = np.linalg.norm(arr)
    if norm > 0:
        residual = np.linalg.norm(result.reconstruct() - arr) / norm
        if residual > 1e3 * RECONSTRUCTION_TOL:
            raise NumericalError("SVD reconstruction check failed", residual=float(residual))
    return result


def hermitian_spectrum(a) -> npt.NDArray[np.float64]:
    arr = _require_hermitian(a, "matrix")
    herm = 0.5 * (arr + arr.conj().T)
    try:
        return sla.eigh(herm, eigvals_only=True)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"eigendecomposition failed: {exc}") from exc


def eigen_extremes_hermitian(a) -> EigenExtremes:
    spectrum = hermitian_spectrum(a)
    return EigenExtremes(lambda_min=float(spectrum[0]), lambda_max=float(spectrum[-1]))


def cond_number(a) -> float:
    """lambda_max / lambda_min of a Hermitian positive definite matrix."""
    extremes = eigen_extremes_hermitian(a)
    floor = SINGULAR_FLOOR * max(abs(extremes.lambda_max), 1.0)
    if extremes.lambda_min <= floor:
        raise SingularMatrixError(
            f"matrix is singular to working precision (lambda_min={extremes.lambda_min:.3e})"
        )
    return extremes.ratio


def _triangular_operands(t, rhs, name: str, kind: str) -> Tuple[ComplexMatrix, ComplexVector]:
    matrix = as_complex_matrix(t, name)
    b = np.asarray(rhs, dtype=np.complex128)
    n = matrix.shape[0]
    if matrix.shape[1] != n or b.shape[0] != n:
        raise DimensionError(f"triangular solve shape mismatch: {name} {matrix.shape}, rhs {b.shape}")
    if np.any(np.diag(matrix) == 0):
        raise SingularMatrixError(f"{kind}-triangular matrix has a zero diagonal entry")
    return matrix, b


def solve_lower_triangular(l, rhs) -> ComplexVector:
    """Forward substitution, Theta(n^2)."""
    lower, b = _triangular_operands(l, rhs, "l", "lower")
    return sla.solve_triangular(lower, b, lower=True, check_finite=False)


def solve_upper_triangular(u, rhs) -> ComplexVector:
    upper, b = _triangular_operands(u, rhs, "u", "upper")
    return sla.solve_triangular(upper, b, lower=False, check_finite=False)


def sqrt_psd(r) -> ComplexMatrix:
    """Principal square root of a Hermitian PSD matrix.

    Eigenvalues in (-EIGEN_CLAMP_FLOOR, 0) are clamped to zero; anything more
    negative is rejected.
    """
    arr = _require_hermitian(r, "r")
    herm = 0.5 * (arr + arr.conj().T)
    scale = max(np.abs(herm).max(), 1.0)
    try:
        w, q = sla.eigh(herm)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"eigendecomposition failed: {exc}") from exc
    if w.min() < -EIGEN_CLAMP_FLOOR * scale:
        raise ValidationError(f"matrix is not PSD (eigenvalue {w.min():.3e})")
    root = (q * np.sqrt(np.clip(w, 0.0, None))) @ q.conj().T
    return 0.5 * (root + root.conj().T)
