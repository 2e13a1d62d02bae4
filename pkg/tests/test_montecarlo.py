from __future__ import annotations

import math

import numpy as np
import pytest
from scipy import stats as scipy_stats

from errors import NotPositiveSemidefiniteError
from gauss_core import GaussianState, displace, vacuum
from metrology import HomodyneChannel
from montecarlo import (
    GENERATOR,
    McConfig,
    _covariance_factor,
    _Moments,
    empirical_noise_reduction_db,
    estimate_phase,
    joint_record,
    mc_lod,
    sample_quadratures,
)
from schemes import (
    InterferometerParams,
    MultiPhaseParams,
    build_tsu_distributed,
    eta_for_noise_reduction,
    two_phase_channels,
)


TSU = InterferometerParams(G=5.0, alpha_sq=100.0)


class TestSampling:
    def test_vacuum_noise(self):
        samples = sample_quadratures(vacuum(1), [HomodyneChannel(0)], 1_000_000, seed=3)
        assert samples.shape == (1_000_000, 1)
        assert np.var(samples[:, 0], ddof=1) == pytest.approx(1.0, rel=5e-3)

    def test_tsu_joint_variance(self):
        channels = two_phase_channels(1.0)
        samples = sample_quadratures(build_tsu_distributed(TSU), channels, 1_000_000, seed=11)
        joint = joint_record(samples, channels)
        assert np.var(joint, ddof=1) == pytest.approx(0.111456, rel=1e-2)

    def test_coherent_channels_are_independent(self):
        n = 200_000
        state = displace(displace(vacuum(2), 0, 2.0), 1, 5.0)
        samples = sample_quadratures(state, two_phase_channels(1.0), n, seed=5)
        covariance = np.cov(samples.T)[0, 1]
        assert abs(covariance) < 4.0 / math.sqrt(n)

    def test_same_seed_same_draws(self):
        channels = two_phase_channels(1.0)
        state = build_tsu_distributed(TSU)
        first = sample_quadratures(state, channels, 5000, seed=42, chunk_size=1000)
        second = sample_quadratures(state, channels, 5000, seed=42, chunk_size=1000)
        other = sample_quadratures(state, channels, 5000, seed=43, chunk_size=1000)
        assert np.array_equal(first, second)
        assert not np.array_equal(first, other)

    def test_workers_do_not_change_draws(self):
        channels = two_phase_channels(1.0)
        state = build_tsu_distributed(TSU)
        serial = sample_quadratures(state, channels, 10_000, seed=9, chunk_size=1024)
        threaded = sample_quadratures(state, channels, 10_000, seed=9, chunk_size=1024, workers=4)
        assert np.array_equal(serial, threaded)

    def test_rejects_empty_request(self):
        with pytest.raises(ValueError):
            sample_quadratures(vacuum(1), [HomodyneChannel(0)], 0, seed=0)


class TestCovarianceFactor:
    def test_factor_reproduces_covariance(self):
        covariance = np.array([[2.0, 0.3], [0.3, 1.0]])
        factor = _covariance_factor(covariance)
        assert np.allclose(factor @ factor.T, covariance)

    def test_singular_covariance_falls_back(self):
        covariance = np.array([[1.0, 1.0], [1.0, 1.0]])
        factor = _covariance_factor(covariance)
        assert np.allclose(factor @ factor.T, covariance)

    def test_indefinite_covariance(self):
        with pytest.raises(NotPositiveSemidefiniteError):
            _covariance_factor(np.array([[1.0, 0.0], [0.0, -0.5]]))

    def test_indefinite_state(self):
        bad = GaussianState(n_modes=1, d=np.zeros(2), sigma=-np.identity(2))
        with pytest.raises(NotPositiveSemidefiniteError):
            sample_quadratures(bad, [HomodyneChannel(0)], 10, seed=0)


def test_merged_moments_match_direct():
    values = np.random.default_rng(1).standard_normal(1001)
    merged = _Moments.of(values[:300]).merge(_Moments.of(values[300:700])).merge(_Moments.of(values[700:]))
    assert merged.count == 1001
    assert merged.mean == pytest.approx(values.mean())
    assert merged.variance == pytest.approx(np.var(values, ddof=1))


class TestEstimator:
    def test_joint_record_applies_weights(self):
        samples = np.array([[1.0, 2.0], [3.0, -1.0]])
        joint = joint_record(samples, two_phase_channels(2.0))
        assert joint.tolist() == [5.0, 1.0]

    def test_joint_record_shape_mismatch(self):
        with pytest.raises(ValueError):
            joint_record(np.zeros((3, 3)), two_phase_channels(1.0))

    def test_halved_slope_quadruples_variance(self):
        joint = np.random.default_rng(2).standard_normal(1000)
        full = np.var(estimate_phase(joint, 2.0))
        half = np.var(estimate_phase(joint, 1.0))
        assert half == pytest.approx(4.0 * full)

    def test_zero_slope(self):
        with pytest.raises(ValueError):
            estimate_phase(np.ones(3), 0.0)

    @pytest.mark.parametrize("phi", [0.0, 0.01])
    def test_estimator_is_unbiased(self, phi):
        params = InterferometerParams(G=5.0, alpha_sq=100.0, phi1=phi, phi2=phi)
        result = mc_lod("tsu-distributed", params, McConfig(samples=200_000, seed=17))
        standard_error = math.sqrt(result.empirical_lod / result.samples)
        assert abs(result.mean_phase - math.tan(phi)) < 5 * standard_error


class TestMcLod:
    @pytest.mark.parametrize(
        "scheme, params",
        [
            ("tsu-distributed", InterferometerParams(G=5.0, alpha_sq=100.0)),
            ("tsu-separable", InterferometerParams(G=5.0, alpha_sq=100.0, eta=0.8)),
            ("classical-distributed", InterferometerParams(G=5.0, alpha_sq=100.0, g=0.7)),
            ("classical-separable", InterferometerParams(G=2.0, alpha_sq=40.0)),
            ("multi-classical", MultiPhaseParams(M=4, n=100.0)),
            ("multi-separable", MultiPhaseParams(M=4, n=100.0)),
            ("multi-entangled", MultiPhaseParams(M=4, n=100.0)),
        ],
    )
    def test_agrees_with_closed_form(self, scheme, params):
        result = mc_lod(scheme, params, McConfig(samples=1_000_000, seed=2024))
        assert result.within_threshold
        assert result.standard_error == pytest.approx(
            result.empirical_lod * math.sqrt(2.0 / result.samples), rel=0.2
        )
        assert result.generator == GENERATOR

    def test_reproducible(self):
        config = McConfig(samples=20_000, seed=7)
        first = mc_lod("tsu-distributed", TSU, config)
        second = mc_lod("tsu-distributed", TSU, config)
        assert first.empirical_lod == second.empirical_lod
        assert first.z_score == second.z_score

    def test_z_scores_are_standard_normal(self):
        z_scores = [
            mc_lod("tsu-distributed", TSU, McConfig(samples=20_000, seed=seed)).z_score
            for seed in range(50)
        ]
        assert scipy_stats.kstest(z_scores, "norm").pvalue > 0.01

    @pytest.mark.parametrize("samples", [10, 999])
    def test_too_few_samples(self, samples):
        with pytest.raises(ValueError):
            McConfig(samples=samples)

    def test_seed_range(self):
        with pytest.raises(ValueError):
            McConfig(seed=-1)
        with pytest.raises(ValueError):
            McConfig(seed=2**64)


def test_squeezing_anchor():
    eta = eta_for_noise_reduction(5.0, 1.7)
    state = build_tsu_distributed(InterferometerParams(G=5.0, alpha_sq=100.0, eta=eta))
    measured = empirical_noise_reduction_db(
        state, two_phase_channels(1.0), McConfig(samples=400_000, seed=8)
    )
    assert measured == pytest.approx(1.7, abs=0.1)
