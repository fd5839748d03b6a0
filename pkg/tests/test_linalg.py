import numpy as np
import pytest
from numpy.testing import assert_allclose

from uwsvd.errors import DimensionError, SingularMatrixError, ValidationError
from uwsvd.linalg import (
    cond_number,
    economy_svd,
    eigen_extremes_hermitian,
    is_hermitian,
    solve_lower_triangular,
    solve_upper_triangular,
    sqrt_psd,
)

from tests.conftest import random_spd


def test_economy_svd_reconstructs_and_is_orthonormal(rng):
    a = rng.standard_normal((12, 4)) + 1j * rng.standard_normal((12, 4))
    svd = economy_svd(a)

    assert svd.u.shape == (12, 4)
    assert np.all(np.diff(svd.singular_values) <= 0)
    assert_allclose(svd.reconstruct(), a, atol=1e-10)
    assert_allclose(svd.u.conj().T @ svd.u, np.eye(4), atol=1e-10)
    assert_allclose(svd.v.conj().T @ svd.v, np.eye(4), atol=1e-10)


def test_economy_svd_phase_convention(rng):
    a = rng.standard_normal((8, 3)) + 1j * rng.standard_normal((8, 3))
    u = economy_svd(a).u
    first = u[0]
    assert_allclose(first.imag, 0.0, atol=1e-12)
    assert np.all(first.real >= 0)


def test_economy_svd_is_deterministic(rng):
    a = rng.standard_normal((10, 3)) + 1j * rng.standard_normal((10, 3))
    first, second = economy_svd(a), economy_svd(a.copy())
    assert np.array_equal(first.u, second.u)
    assert np.array_equal(first.v, second.v)


def test_economy_svd_rejects_wide_matrix():
    with pytest.raises(DimensionError):
        economy_svd(np.ones((2, 3)))


def test_eigen_extremes_of_diagonal_matrix():
    extremes = eigen_extremes_hermitian(np.diag([3.0, 1.0, 2.0]))
    assert extremes.lambda_min == pytest.approx(1.0)
    assert extremes.lambda_max == pytest.approx(3.0)
    assert extremes.ratio == pytest.approx(3.0)


def test_cond_number_of_identity_is_one():
    assert cond_number(np.eye(5)) == pytest.approx(1.0)


def test_cond_number_matches_requested_spectrum(rng):
    assert cond_number(random_spd(rng, 6, 40.0)) == pytest.approx(40.0, rel=1e-8)


def test_cond_number_rejects_singular_matrix():
    with pytest.raises(SingularMatrixError):
        cond_number(np.diag([1.0, 0.0]))


def test_non_hermitian_input_is_rejected():
    a = np.array([[1.0, 2.0], [0.0, 1.0]])
    assert not is_hermitian(a)
    with pytest.raises(ValidationError):
        cond_number(a)


def test_triangular_solves(rng):
    lower = np.tril(rng.standard_normal((5, 5))) + 5 * np.eye(5)
    b = rng.standard_normal(5) + 1j * rng.standard_normal(5)
    assert_allclose(lower @ solve_lower_triangular(lower, b), b, atol=1e-12)
    upper = lower.conj().T
    assert_allclose(upper @ solve_upper_triangular(upper, b), b, atol=1e-12)


def test_triangular_solve_zero_pivot():
    with pytest.raises(SingularMatrixError):
        solve_lower_triangular(np.array([[1.0, 0.0], [1.0, 0.0]]), np.ones(2))
    with pytest.raises(SingularMatrixError):
        solve_upper_triangular(np.array([[1.0, 1.0], [0.0, 0.0]]), np.ones(2))


@pytest.mark.parametrize("solve", [solve_lower_triangular, solve_upper_triangular])
def test_triangular_solves_reject_bad_shapes(solve):
    with pytest.raises(DimensionError):
        solve(np.eye(3)[:, :2], np.ones(3))
    with pytest.raises(DimensionError):
        solve(np.eye(3), np.ones(2))


def test_sqrt_psd_squares_back(rng):
    r = random_spd(rng, 5, 10.0)
    root = sqrt_psd(r)
    assert is_hermitian(root)
    assert_allclose(root @ root, r, atol=1e-10)


def test_sqrt_psd_clamps_tiny_negative_eigenvalues():
    r = np.array([[1.0, 1.0], [1.0, 1.0]]) - 1e-14 * np.eye(2)
    root = sqrt_psd(r)
    assert_allclose(root @ root, r, atol=1e-7)


def test_sqrt_psd_rejects_indefinite_matrix():
    with pytest.raises(ValidationError):
        sqrt_psd(np.diag([1.0, -1.0]))
