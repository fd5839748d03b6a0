import numpy as np
import pytest
from numpy.testing import assert_allclose

from uwsvd.errors import DimensionError, ValidationError
from uwsvd.modem import (
    SUPPORTED_ORDERS,
    Constellation,
    SnrSpec,
    demodulate_hard,
    modulate,
    random_indices,
    symbol_error_rate,
    transmit,
)


def test_qpsk_first_point():
    assert modulate([0], Constellation.qam(4))[0] == pytest.approx((1 + 1j) / np.sqrt(2))


@pytest.mark.parametrize("order", SUPPORTED_ORDERS)
def test_unit_average_energy(order):
    points = Constellation.qam(order).points
    assert len(points) == order
    assert np.mean(np.abs(points) ** 2) == pytest.approx(1.0)


@pytest.mark.parametrize("order", SUPPORTED_ORDERS)
def test_gray_neighbours_differ_in_one_bit(order):
    constellation = Constellation.qam(order)
    points = constellation.points
    for i in range(order):
        for j in range(i + 1, order):
            if np.isclose(abs(points[i] - points[j]), constellation.min_distance):
                assert bin(i ^ j).count("1") == 1


@pytest.mark.parametrize("order", SUPPORTED_ORDERS)
def test_demodulate_inverts_modulate(order, rng):
    constellation = Constellation.qam(order)
    indices = random_indices(500, order, rng)
    assert np.array_equal(demodulate_hard(modulate(indices, constellation), constellation), indices)


def test_small_perturbation_keeps_decision(rng):
    constellation = Constellation.qam(16)
    indices = random_indices(400, 16, rng)
    radius = 0.49 * constellation.min_distance
    angle = rng.uniform(0, 2 * np.pi, 400)
    noisy = modulate(indices, constellation) + radius * np.exp(1j * angle)
    assert np.array_equal(demodulate_hard(noisy, constellation), indices)


def test_ties_go_to_smaller_index():
    constellation = Constellation.qam(4)
    midpoint = 0.5 * (constellation.points[0] + constellation.points[1])
    assert demodulate_hard([midpoint], constellation)[0] == 0


def test_modulate_rejects_out_of_range():
    with pytest.raises(ValidationError):
        modulate([16], Constellation.qam(16))
    with pytest.raises(ValidationError):
        modulate([0.5], Constellation.qam(16))


def test_unsupported_order():
    with pytest.raises(ValidationError):
        Constellation.qam(8)


def test_snr_spec():
    assert SnrSpec(10.0).sigma_z_sq == pytest.approx(0.1)
    assert SnrSpec(float("inf")).sigma_z_sq == 0.0
    with pytest.raises(ValidationError):
        SnrSpec(float("nan"))


def test_noiseless_transmit_is_exact(rng):
    h = rng.standard_normal((6, 3)) + 1j * rng.standard_normal((6, 3))
    x = modulate([0, 5, 9], Constellation.qam(16))
    assert np.array_equal(transmit(h, x, SnrSpec(float("inf")), rng), h @ x)


def test_noise_power_matches_snr(rng):
    m = 100_000
    y = transmit(np.zeros((m, 1)), np.zeros(1, dtype=np.complex128), SnrSpec(10.0), rng)
    assert np.mean(np.abs(y) ** 2) == pytest.approx(0.1, rel=0.03)


def test_measured_snr_within_a_tenth_of_a_db(rng):
    constellation = Constellation.qam(16)
    snr = SnrSpec(12.0)
    signal = noise = 0.0
    for _ in range(20000):
        x = modulate(random_indices(4, 16, rng), constellation)
        y = transmit(np.eye(4), x, snr, rng)
        signal += np.sum(np.abs(x) ** 2)
        noise += np.sum(np.abs(y - x) ** 2)
    assert 10 * np.log10(signal / noise) == pytest.approx(12.0, abs=0.1)


def test_transmit_dimension_mismatch(rng):
    with pytest.raises(DimensionError):
        transmit(np.ones((4, 3)), np.ones(2), SnrSpec(10.0), rng)


def test_symbol_error_rate():
    assert symbol_error_rate([0, 1, 2, 3], [0, 1, 2, 3]) == 0.0
    assert symbol_error_rate([0, 1, 2, 3], [0, 1, 2, 0]) == pytest.approx(0.25)
    with pytest.raises(ValidationError):
        symbol_error_rate([0, 1], [0, 1, 2])
    assert_allclose(symbol_error_rate([], []), 0.0)
