"""Smoke tests for the python bindings."""

import math

import numpy as np
import pytest

import sdmimo


def test_quantize_follows_sign_convention():
    assert sdmimo.quantize_1bit(0.3 - 0.7j, 1.0) == 1 - 1j
    assert sdmimo.quantize_1bit(0j, 2.0) == 2 + 2j
    with pytest.raises(ValueError):
        sdmimo.quantize_1bit(complex("nan"), 1.0)


def test_sigma_delta_forward_trace():
    config = sdmimo.SigmaDeltaConfig(4, 1.0)
    trace = sdmimo.sigma_delta_forward(np.zeros(4, dtype=complex), config)
    np.testing.assert_array_equal(trace.output_y, [1 + 1j, -1 - 1j, 1 + 1j, -1 - 1j])
    assert sdmimo.floor_identity_residual(trace, config) <= 1e-9


def test_pilots_verify():
    pilots = sdmimo.predistort_pilots(8)
    assert sdmimo.verify_pilots(pilots)
    gram = pilots.transmit_s @ pilots.transmit_s.conj().T
    np.testing.assert_allclose(gram, 16 * np.eye(8), atol=0)


def test_steering_vector_norm():
    geom = sdmimo.ArrayGeometry(16, 0.125, 1.0)
    a = sdmimo.steering_vector(25.0, geom)
    assert a.shape == (16,)
    assert a[0] == 1.0 + 0.0j
    assert math.isclose(np.linalg.norm(a) ** 2, 16.0, rel_tol=1e-12)


def test_voltage_level_rule():
    assert math.isclose(
        sdmimo.select_voltage_level(1.0, 8), 4.0 + 3.0 * math.sqrt(0.5), rel_tol=1e-12
    )


def test_noise_model_whitens():
    model = sdmimo.combined_noise_covariance(16, 2.0)
    eye = model.inverse_sqrt @ model.covariance @ model.inverse_sqrt.conj().T
    np.testing.assert_allclose(eye, np.eye(16), atol=1e-10)


def test_noiseless_end_to_end_recovery():
    bs = sdmimo.ArrayGeometry(32, 0.125, 1.0)
    ms = sdmimo.ArrayGeometry(8, 0.125, 1.0)
    scenario = sdmimo.make_los_channel(12.0, -30.0, np.exp(0.4j), bs, ms)
    pilots = sdmimo.predistort_pilots(8)
    record = sdmimo.synthesize_received(scenario, pilots.transmit_s, 1.0, 0, True)
    noise = sdmimo.NoiseModel.identity(32)
    result = sdmimo.estimate_channel(record.received, pilots.transmit_s, 1.0, noise, bs, ms)
    nmse = np.linalg.norm(result.h_check - scenario.channel) ** 2 / (
        np.linalg.norm(scenario.channel) ** 2
    )
    assert nmse <= 1e-6


def test_small_sweep_runs():
    config = sdmimo.MonteCarloConfig()
    config.n_trials = 2
    config.snr_db_list = [0.0]
    config.methods = [sdmimo.Method.UQ]
    config.noiseless = True
    table = sdmimo.nmse_sweep(config)
    assert len(table.rows) == 1
    assert table.rows[0].nmse <= 1e-6


def test_correlation_profile_shape():
    profile = sdmimo.correlation_experiment(-5.0, 200, 1)
    assert profile.corr_sd.shape == (128,)
    assert profile.corr_onebit.shape == (128,)
    assert profile.n_draws == 200
