import math

import numpy as np
import pytest

from nspradar.estimator import (
    EstimationError,
    MLGrid,
    estimate_aoa,
    matched_filter,
    ml_objective,
    objective_on_grid,
    simulate_received,
)
from nspradar.geometry import ArrayGeometry, receive_steering, steering_matrix, transmit_steering
from nspradar.nsp import null_space_projector, project_waveform
from nspradar.waveform import correlation_matrix, generate_orthogonal_bpsk

from conftest import crandn

GEO = ArrayGeometry(4, 4)
X = generate_orthogonal_bpsk(4, 256)


def steer(theta, geo=GEO):
    return steering_matrix(receive_steering(geo, theta), transmit_steering(geo, theta))


def test_grid_layout():
    g = MLGrid()
    assert len(g) == 361
    assert g.degrees[0] == -90 and g.degrees[-1] == 90
    assert np.all(np.diff(g.angles) > 0)
    assert g.step == pytest.approx(math.radians(0.5))
    with pytest.raises(ValueError):
        MLGrid(step_deg=0)
    with pytest.raises(ValueError):
        MLGrid(lo_deg=-100)


def test_noiseless_receive_is_exact():
    snap = simulate_received(GEO, X, 0.0, 1.0, 0.0)
    np.testing.assert_allclose(snap.samples, np.ones((4, 4)) @ X, atol=1e-14)


def test_pure_noise_variance():
    rng = np.random.default_rng(2)
    x = generate_orthogonal_bpsk(4, 1024)
    snap = simulate_received(ArrayGeometry(4, 100), x, 0.3, 0.0, 0.7, rng)
    assert snap.samples.size >= 10**5
    assert abs(np.mean(np.abs(snap.samples) ** 2) / 0.7 - 1) < 0.02


def test_receive_determinism():
    a = simulate_received(GEO, X, 0.2, 1.0, 0.1, np.random.default_rng(4)).samples
    b = simulate_received(GEO, X, 0.2, 1.0, 0.1, np.random.default_rng(4)).samples
    assert np.array_equal(a, b)
    with pytest.raises(ValueError):
        simulate_received(GEO, X, 0.2, 1.0, -1.0, np.random.default_rng(4))


def test_matched_filter_basics(rng):
    np.testing.assert_allclose(matched_filter(X, X), np.eye(4), atol=1e-12)
    np.testing.assert_array_equal(matched_filter(np.zeros((4, 256)), X), np.zeros((4, 4)))
    alpha = 0.3 - 0.8j
    a = steer(math.radians(20))
    np.testing.assert_allclose(matched_filter(alpha * a @ X, X), alpha * a, atol=1e-12)


def test_matched_filter_delay_doppler_against_loop(rng):
    y = crandn(rng, 3, 16)
    x = crandn(rng, 2, 16)
    tau, wd = 3, 0.4
    brute = np.zeros((3, 2), complex)
    for n in range(16):
        xs = x[:, n - tau] if n - tau >= 0 else np.zeros(2)
        brute += np.outer(y[:, n], np.conj(xs)) * np.exp(1j * wd * n)
    np.testing.assert_allclose(matched_filter(y, x, tau, wd), brute, atol=1e-12)
    brute = np.zeros((3, 2), complex)
    for n in range(16):
        xs = x[:, n + 2] if n + 2 < 16 else np.zeros(2)
        brute += np.outer(y[:, n], np.conj(xs))
    np.testing.assert_allclose(matched_filter(y, x, -2), brute, atol=1e-12)


def test_objective_zero_for_zero_e():
    for deg in (-40, 0, 25):
        assert ml_objective(math.radians(deg), np.zeros((4, 4)), np.eye(4), GEO) == 0


@pytest.mark.parametrize("m_t,m_r", [(4, 4), (3, 5)])
def test_objective_peak_value(m_t, m_r):
    # |alpha|^2 |M_R M_T|^2 / (M_R M_T) = M_R M_T |alpha|^2
    geo = ArrayGeometry(m_t, m_r)
    alpha = 0.5 + 1.5j
    th = math.radians(-17)
    e = alpha * steer(th, geo)
    val = ml_objective(th, e, np.eye(m_t), geo)
    assert val == pytest.approx(m_r * m_t * abs(alpha) ** 2, rel=1e-12)


def test_objective_scaling_homogeneity(rng):
    e = crandn(rng, 4, 4)
    r = correlation_matrix(crandn(rng, 4, 32))
    grid = MLGrid(1.0)
    base = objective_on_grid(e, r, grid, GEO)
    c = 2.0 - 3.0j
    scaled = objective_on_grid(c * e, r, grid, GEO)
    np.testing.assert_allclose(scaled, abs(c) ** 2 * base, rtol=1e-12)
    assert np.argmax(scaled) == np.argmax(base)


def test_objective_invariant_to_unit_modulus_waveform_phase(rng):
    grid = MLGrid(1.0)
    th = math.radians(12)
    y = simulate_received(GEO, X, th, 1.0, 0.01, np.random.default_rng(1)).samples
    xr = np.exp(1j * 0.77) * X
    y_r = np.exp(1j * 0.77) * y
    a = objective_on_grid(matched_filter(y, X), correlation_matrix(X), grid, GEO)
    b = objective_on_grid(matched_filter(y_r, xr), correlation_matrix(xr), grid, GEO)
    np.testing.assert_allclose(a, b, rtol=1e-10)


def test_argmax_invariant_to_joint_scaling():
    th = math.radians(33)
    y = simulate_received(GEO, X, th, 1.0, 0.5, np.random.default_rng(9)).samples
    grid = MLGrid()
    a = estimate_aoa(y, X, None, grid, GEO)
    s = 7.5
    b = estimate_aoa(s * y, s * X, correlation_matrix(s * X), grid, GEO)
    assert a == b


def brute_force_estimate(y, x, grid, geo):
    e = sum(np.outer(y[:, n], x[:, n].conj()) for n in range(x.shape[1]))
    r = sum(np.outer(x[:, n], x[:, n].conj()) for n in range(x.shape[1]))
    best, arg = -1.0, None
    for th in grid.angles:
        a_t = transmit_steering(geo, th)
        a_r = receive_steering(geo, th)
        den = geo.num_rx * np.real(a_t.conj() @ r.T @ a_t)
        val = abs(a_r.conj() @ e @ a_t.conj()) ** 2 / den
        if val > best:
            best, arg = val, th
    return arg


def test_noisy_estimate_matches_brute_force():
    grid = MLGrid(1.0)
    rng = np.random.default_rng(17)
    for _ in range(5):
        th = grid.angles[rng.integers(30, 150)]
        y = simulate_received(GEO, X, th, 1.0, 0.05, rng).samples
        assert estimate_aoa(y, X, None, grid, GEO) == brute_force_estimate(y, X, grid, GEO)


def test_noiseless_sweep_is_exact_for_original_waveform():
    grid = MLGrid()
    for deg, th in zip(grid.degrees, grid.angles):
        if abs(deg) > 89:
            continue  # sin(+-90) aliases for half-wavelength spacing
        y = simulate_received(GEO, X, th).samples
        est = estimate_aoa(y, X, None, grid, GEO)
        assert est == th
        assert -math.pi / 2 <= est <= math.pi / 2


def test_noiseless_nsp_waveform_is_exact(rng):
    grid = MLGrid()
    for _ in range(10):
        p = null_space_projector(crandn(rng, 2, 4))
        xp = project_waveform(p, X)
        th = grid.angles[rng.integers(60, 300)]
        y = simulate_received(GEO, xp, th).samples
        assert estimate_aoa(y, xp, correlation_matrix(xp), grid, GEO) == th


def test_degenerate_denominator_raises():
    with pytest.raises(EstimationError):
        estimate_aoa(np.zeros((4, 256)), np.zeros_like(X), None, MLGrid(), GEO)
    assert math.isnan(ml_objective(0.1, np.eye(4), np.zeros((4, 4)), GEO))


def test_high_snr_rmse_within_grid_step():
    # SNR 25 dB per receive antenna, original waveform
    grid = MLGrid()
    rng = np.random.default_rng(25)
    sigma2 = (4 / 256) / 10 ** 2.5
    targets = grid.angles[np.abs(grid.degrees) <= 60]
    err = []
    for _ in range(1000):
        th = targets[rng.integers(targets.size)]
        y = simulate_received(GEO, X, th, 1.0, sigma2, rng).samples
        err.append(estimate_aoa(y, X, None, grid, GEO) - th)
    assert np.sqrt(np.mean(np.square(err))) <= grid.step
