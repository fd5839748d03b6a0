import numpy as np
import pytest
from numpy.testing import assert_allclose

from uwsvd.channels import ChannelGenerator, ChannelModelId, PropagationParams
from uwsvd.detection import (
    Coordinates,
    DenseGram,
    DetectorMode,
    UwSvdFactors,
    block_orthogonal_channel,
    build_problem_esignal,
    build_problem_original,
    exact_solve,
    post_process,
    to_estimate,
    uw_svd,
)
from uwsvd.errors import DegenerateChannelError, DimensionError, NumericalError, ValidationError
from uwsvd.infrastructure import FlopCounter
from uwsvd.linalg import cond_number, eigen_extremes_hermitian
from uwsvd.modem import Constellation, SnrSpec, modulate, random_indices, transmit

from tests.conftest import dense_problem


def _channel(generator, model=ChannelModelId.MODEL3, seed=4):
    return generator.draw(model, np.random.default_rng(seed))


def test_uw_svd_factorization(correlated_generator):
    realization = _channel(correlated_generator)
    factors = uw_svd(realization.h, realization.partition)

    assert_allclose(np.linalg.norm(factors.psi, axis=0), 1.0, atol=1e-10)
    assert_allclose(factors.reconstruct(), realization.h, atol=1e-10)
    for v_k in factors.v_blocks:
        assert_allclose(v_k.conj().T @ v_k, np.eye(v_k.shape[0]), atol=1e-10)
    phi = factors.psi.conj().T @ factors.psi
    assert_allclose(np.diag(phi).real, 1.0, atol=1e-10)


def test_uw_svd_charges_overhead():
    counter = FlopCounter()
    h = np.random.default_rng(0).standard_normal((16, 6)) + 0j
    uw_svd(h, [2, 2, 2], counter)
    assert counter.get_metrics()["uw_svd_overhead"] == 3 * 16 * 4


def test_single_user_psi_is_orthonormal(rng):
    h = rng.standard_normal((10, 3)) + 1j * rng.standard_normal((10, 3))
    factors = uw_svd(h, [3])
    assert cond_number(factors.psi.conj().T @ factors.psi) == pytest.approx(1.0)


def test_block_orthogonal_channel_gives_identity_phi(rng):
    h = block_orthogonal_channel(32, [2, 2, 2, 2], 0.9, rng)
    factors = uw_svd(h, [2, 2, 2, 2])
    assert_allclose(factors.psi.conj().T @ factors.psi, np.eye(8), atol=1e-10)
    assert cond_number(h.conj().T @ h) > 1.5


def test_rank_deficient_user_is_degenerate(rng):
    h = rng.standard_normal((8, 4)) + 1j * rng.standard_normal((8, 4))
    h[:, 3] = h[:, 2]
    with pytest.raises(DegenerateChannelError) as info:
        uw_svd(h, [2, 2])
    assert info.value.user == 1


def test_partition_must_cover_columns(rng):
    with pytest.raises(DimensionError):
        uw_svd(np.ones((6, 4)), [2, 1])


def test_tiny_singular_value_fails_the_floor():
    factors = UwSvdFactors(
        psi=np.eye(2, dtype=np.complex128),
        sigma=np.array([1.0, 1e-14]),
        v_blocks=(np.eye(1), np.eye(1)),
        partition=(1, 1),
    )
    with pytest.raises(DegenerateChannelError) as info:
        factors.require_sigma_floor()
    assert info.value.user == 1


def test_post_process_scalar_example():
    factors = UwSvdFactors(
        psi=np.ones((1, 1), dtype=np.complex128),
        sigma=np.array([2.0]),
        v_blocks=(np.eye(1, dtype=np.complex128),),
        partition=(1,),
    )
    assert_allclose(post_process(factors, np.array([4.0 + 0j])), [2.0])


def test_post_process_inverts_the_esignal_map(correlated_generator, rng):
    realization = _channel(correlated_generator)
    factors = uw_svd(realization.h, realization.partition)
    x = rng.standard_normal(8) + 1j * rng.standard_normal(8)
    s = factors.sigma * (factors.v().conj().T @ x)
    assert_allclose(post_process(factors, s), x, atol=1e-12)


def test_original_problem_with_identity_channel():
    b = np.array([1.0, 2.0j, -1.0])
    zf = build_problem_original(np.eye(3), b, DetectorMode.ZF)
    assert_allclose(zf.rhs, b)
    assert_allclose(zf.operator.materialize().matrix, np.eye(3))

    lmmse = build_problem_original(np.eye(3), b, DetectorMode.LMMSE, rho=10.0)
    assert_allclose(lmmse.operator.materialize().matrix, 1.1 * np.eye(3))


def test_lmmse_needs_positive_rho():
    with pytest.raises(ValidationError):
        build_problem_original(np.eye(2), np.ones(2), DetectorMode.LMMSE)


def test_observation_length_is_checked():
    with pytest.raises(DimensionError):
        build_problem_original(np.eye(3), np.ones(2), DetectorMode.ZF)


def test_matvec_matches_materialized_gram(correlated_generator, rng):
    h = _channel(correlated_generator).h
    problem = build_problem_original(h, rng.standard_normal(64) + 0j, DetectorMode.LMMSE, rho=5.0)
    v = rng.standard_normal(8) + 1j * rng.standard_normal(8)
    assert_allclose(problem.operator.matvec(v), problem.operator.materialize().matrix @ v, atol=1e-12)


def test_lmmse_spectrum_is_lifted(correlated_generator):
    h = _channel(correlated_generator).h
    rho = 4.0
    gram = build_problem_original(h, np.zeros(64), DetectorMode.LMMSE, rho=rho).operator.materialize().matrix
    assert eigen_extremes_hermitian(gram).lambda_min >= 1.0 / rho - 1e-12


def test_esignal_lmmse_gram(correlated_generator):
    realization = _channel(correlated_generator)
    factors = uw_svd(realization.h, realization.partition)
    rho = 2.0
    problem = build_problem_esignal(factors, np.zeros(64), DetectorMode.LMMSE, rho=rho)
    expected = factors.psi.conj().T @ factors.psi + np.diag(1.0 / (rho * factors.sigma**2))
    assert_allclose(problem.operator.materialize().matrix, expected, atol=1e-12)
    assert problem.coords is Coordinates.ESIGNAL
    assert not problem.operator.unit_diagonal


def test_esignal_zf_has_unit_diagonal(correlated_generator):
    realization = _channel(correlated_generator)
    factors = uw_svd(realization.h, realization.partition)
    problem = build_problem_esignal(factors, np.zeros(64), DetectorMode.ZF)
    assert problem.operator.unit_diagonal
    assert_allclose(problem.operator.diagonal(), 1.0)


def test_exact_solve_diagonal_example():
    x = exact_solve(dense_problem(np.diag([2.0, 4.0]), [2.0, 8.0]))
    assert_allclose(x, [1.0, 2.0])


def test_exact_solve_rejects_indefinite_gram():
    with pytest.raises(NumericalError):
        exact_solve(dense_problem([[1.0, 2.0], [2.0, 1.0]], [1.0, 1.0]))


def test_exact_solve_charges_gram_and_inverse(rng):
    h = rng.standard_normal((12, 4)) + 1j * rng.standard_normal((12, 4))
    counter = FlopCounter()
    problem = build_problem_original(h, np.ones(12), DetectorMode.ZF, counter=counter)
    exact_solve(problem, counter)
    metrics = counter.get_metrics()
    assert metrics["matched_filter"] == 12 * 4
    assert metrics["gram_build"] == 12 * 16
    assert metrics["matrix_inverse"] == 64


def test_noiseless_zf_recovers_symbols(correlated_generator, rng):
    h = _channel(correlated_generator).h
    constellation = Constellation.qam(16)
    x = modulate(random_indices(8, 16, rng), constellation)
    y = transmit(h, x, SnrSpec(float("inf")), rng)
    x_hat = exact_solve(build_problem_original(h, y, DetectorMode.ZF))
    assert np.linalg.norm(x_hat - x) <= 1e-8 * np.linalg.norm(x)


@pytest.mark.parametrize("model", list(ChannelModelId))
@pytest.mark.parametrize("mode", list(DetectorMode))
def test_esignal_detector_equals_original(small_geometry, model, mode):
    generator = ChannelGenerator(small_geometry, PropagationParams(corr_rho=0.5))
    for seed in range(5):
        rng = np.random.default_rng(seed)
        realization = generator.draw(model, rng)
        y = transmit(realization.h, modulate(random_indices(8, 16, rng), Constellation.qam(16)), SnrSpec(15.0), rng)
        rho = SnrSpec(15.0).rho_linear

        direct = exact_solve(build_problem_original(realization.h, y, mode, rho=rho))
        factors = uw_svd(realization.h, realization.partition)
        esignal = build_problem_esignal(factors, y, mode, rho=rho)
        via = to_estimate(esignal, exact_solve(esignal)).x_hat
        assert np.linalg.norm(via - direct) <= 1e-8 * np.linalg.norm(direct)


def test_esignal_covariance_is_sigma_squared(correlated_generator, rng):
    realization = _channel(correlated_generator)
    factors = uw_svd(realization.h, realization.partition)
    v_h = factors.v().conj().T
    constellation = Constellation.qam(16)

    draws = 20000
    x = modulate(random_indices(8 * draws, 16, rng), constellation).reshape(draws, 8)
    s = (factors.sigma[:, None] * (v_h @ x.T)).T
    covariance = s.T @ s.conj() / draws
    assert_allclose(covariance, np.diag(factors.sigma**2), atol=0.05 * factors.sigma.max() ** 2)


def test_to_estimate_original_passthrough():
    problem = dense_problem(np.eye(2), [1.0, 1.0])
    estimate = to_estimate(problem, np.array([1.0, 2.0]))
    assert estimate.coords is Coordinates.ORIGINAL
    assert not estimate.post_processed


def test_dense_gram_lower_triangle():
    gram = DenseGram(np.array([[2.0, 1.0 - 1j], [1.0 + 1j, 3.0]]))
    assert_allclose(gram.lower(), [[2.0, 0.0], [1.0 + 1j, 3.0]])
