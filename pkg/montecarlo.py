"""
Sampling oracle for the closed forms.

Homodyne records are drawn from the exact multivariate normal of the channel
quadratures. Samples are partitioned into consecutive chunks; chunk k draws
from default_rng(SeedSequence(seed).spawn(...)[k]) (PCG64, ziggurat normals),
so results depend only on (seed, samples, chunk_size).
"""
from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import reduce
from typing import Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from errors import NotPositiveSemidefiniteError
from gauss_core import GaussianState
from metrology import (
    DEFAULT_SLOPE_STEP,
    PSD_TOL,
    HomodyneChannel,
    QuadratureStats,
    db,
    joint_quadrature_stats,
    signal_slope,
)
from schemes import InterferometerParams, MultiPhaseParams, Scheme, sensor_setup
from utils import chunk_ranges


logger = logging.getLogger(__name__)

GENERATOR = "numpy PCG64 via SeedSequence.spawn per chunk, ziggurat normals"
Z_THRESHOLD = 4.0


class McConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    samples: int = Field(default=1_000_000, ge=1000)
    seed: int = Field(default=0, ge=0, lt=2**64)
    chunk_size: int = Field(default=65536, ge=1)
    workers: int = Field(default=1, ge=1)
    slope_step: float = Field(default=DEFAULT_SLOPE_STEP, gt=0)


@dataclass(frozen=True)
class McResult:
    scheme: Scheme
    empirical_lod: float
    standard_error: float
    analytic_lod: float
    z_score: float
    mean_phase: float
    samples: int
    seed: int
    generator: str = GENERATOR

    @property
    def within_threshold(self) -> bool:
        return abs(self.z_score) < Z_THRESHOLD


@dataclass(frozen=True)
class _Moments:
    count: int
    mean: float
    m2: float

    @classmethod
    def of(cls, values: np.ndarray) -> "_Moments":
        mean = float(values.mean())
        return cls(count=values.size, mean=mean, m2=float(np.sum((values - mean) ** 2)))

    def merge(self, other: "_Moments") -> "_Moments":
        count = self.count + other.count
        delta = other.mean - self.mean
        mean = self.mean + delta * other.count / count
        m2 = self.m2 + other.m2 + delta * delta * self.count * other.count / count
        return _Moments(count=count, mean=mean, m2=m2)

    @property
    def variance(self) -> float:
        return self.m2 / (self.count - 1)


def _covariance_factor(covariance: np.ndarray) -> np.ndarray:
    """L with L L^T = covariance; Cholesky, eigen-factor when singular."""
    scale = max(1.0, float(np.max(np.abs(covariance))))
    eigenvalues, eigenvectors = np.linalg.eigh(covariance)
    if eigenvalues.min() < -PSD_TOL * scale:
        raise NotPositiveSemidefiniteError(
            f"channel covariance has eigenvalue {eigenvalues.min():.3e}"
        )
    try:
        return np.linalg.cholesky(covariance)
    except np.linalg.LinAlgError:
        logger.debug("covariance is singular, falling back to eigen-factorization")
        return eigenvectors * np.sqrt(np.clip(eigenvalues, 0.0, None))


def _chunk_seeds(seed: int, samples: int, chunk_size: int) -> list[tuple[int, int, np.random.SeedSequence]]:
    ranges = list(chunk_ranges(samples, chunk_size))
    children = np.random.SeedSequence(seed).spawn(len(ranges))
    return [(start, end, child) for (start, end), child in zip(ranges, children)]


def _draw(
    means: np.ndarray, factor: np.ndarray, size: int, child: np.random.SeedSequence
) -> np.ndarray:
    rng = np.random.default_rng(child)
    normals = rng.standard_normal((size, means.size))
    return means + normals @ factor.T


def _map_chunks(func, chunks: list, workers: int) -> list:
    if workers == 1:
        return [func(chunk) for chunk in chunks]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(func, chunks))


def sample_quadratures(
    state: GaussianState,
    channels: Sequence[HomodyneChannel],
    n_samples: int,
    seed: int,
    chunk_size: int = 65536,
    workers: int = 1,
) -> np.ndarray:
    """Homodyne outcomes, shape (n_samples, len(channels)), weights not applied."""
    if n_samples < 1:
        raise ValueError("n_samples must be positive")
    stats = joint_quadrature_stats(state, channels)
    factor = _covariance_factor(stats.cross_covariance_matrix)
    chunks = _chunk_seeds(seed, n_samples, chunk_size)
    parts = _map_chunks(
        lambda chunk: _draw(stats.channel_means, factor, chunk[1] - chunk[0], chunk[2]),
        chunks,
        workers,
    )
    return np.concatenate(parts, axis=0)


def joint_record(samples: np.ndarray, channels: Sequence[HomodyneChannel]) -> np.ndarray:
    weights = np.array([ch.weight for ch in channels], dtype=float)
    if samples.ndim != 2 or samples.shape[1] != weights.size:
        raise ValueError(f"samples must have shape (N, {weights.size}), got {samples.shape}")
    return samples @ weights


def estimate_phase(joint: np.ndarray, slope: float) -> np.ndarray:
    """Linear estimator phi_hat = x_+ / slope, one value per record."""
    if slope == 0:
        raise ValueError("slope must be non-zero")
    return np.asarray(joint, dtype=float) / slope


def _phase_moments(
    stats: QuadratureStats,
    channels: Sequence[HomodyneChannel],
    slope: float,
    config: McConfig,
) -> _Moments:
    factor = _covariance_factor(stats.cross_covariance_matrix)
    chunks = _chunk_seeds(config.seed, config.samples, config.chunk_size)

    def moments(chunk: tuple[int, int, np.random.SeedSequence]) -> _Moments:
        start, end, child = chunk
        draws = _draw(stats.channel_means, factor, end - start, child)
        return _Moments.of(estimate_phase(joint_record(draws, channels), slope))

    parts = _map_chunks(moments, chunks, config.workers)
    return reduce(_Moments.merge, parts)


def mc_lod(
    scheme: Scheme | str,
    params: InterferometerParams | MultiPhaseParams,
    config: McConfig | None = None,
) -> McResult:
    config = config or McConfig()
    setup = sensor_setup(scheme, params)
    stats = joint_quadrature_stats(setup.state, setup.channels)
    slope = signal_slope(setup.builder, setup.channels, setup.operating_phases, config.slope_step)
    moments = _phase_moments(stats, setup.channels, slope, config)
    empirical = moments.variance
    standard_error = empirical * math.sqrt(2.0 / (config.samples - 1))
    analytic = setup.analytic.delta_phi_sq
    result = McResult(
        scheme=setup.scheme,
        empirical_lod=empirical,
        standard_error=standard_error,
        analytic_lod=analytic,
        z_score=(empirical - analytic) / standard_error,
        mean_phase=moments.mean,
        samples=config.samples,
        seed=config.seed,
    )
    if not result.within_threshold:
        logger.warning(
            "%s: empirical LOD %.6g vs analytic %.6g, z=%.2f",
            setup.scheme.value, empirical, analytic, result.z_score,
        )
    else:
        logger.info("%s: z=%.3f over %s samples", setup.scheme.value, result.z_score, config.samples)
    return result


def empirical_noise_reduction_db(
    state: GaussianState,
    channels: Sequence[HomodyneChannel],
    config: McConfig | None = None,
) -> float:
    """Sampled joint-quadrature noise below the coherent level sum(w_k^2), in dB."""
    config = config or McConfig()
    samples = sample_quadratures(
        state, channels, config.samples, config.seed, config.chunk_size, config.workers
    )
    joint = joint_record(samples, channels)
    benchmark = sum(ch.weight * ch.weight for ch in channels)
    return -db(float(np.var(joint, ddof=1)) / benchmark)
