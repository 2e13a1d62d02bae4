from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy import linalg

from errors import (
    SingularEstimatorError,
    SingularMatrixError,
    UndefinedSignalError,
)
from gauss_core import GaussianState, ModeSelector


logger = logging.getLogger(__name__)

PHASE_QUADRATURE = math.pi / 2
DEFAULT_QFI_STEP = 1e-6
DEFAULT_SLOPE_STEP = 1e-5
BETA_NORM_TOL = 1e-9
PSD_TOL = 1e-10

StateBuilder = Callable[[np.ndarray], GaussianState]


@dataclass(frozen=True)
class HomodyneChannel:
    """Homodyne record of X(theta) = e^{-i theta} a^dag + e^{i theta} a, scaled by weight."""

    mode: int
    theta: float = PHASE_QUADRATURE
    weight: float = 1.0

    def __post_init__(self) -> None:
        if not math.isfinite(self.theta):
            raise ValueError("theta must be finite")
        if not math.isfinite(self.weight):
            raise ValueError("weight must be finite")


@dataclass(frozen=True)
class QuadratureStats:
    mean: float
    variance: float
    channel_means: np.ndarray
    cross_covariance_matrix: np.ndarray


@dataclass(frozen=True)
class FisherMatrix:
    m: int
    entries: np.ndarray

    def __post_init__(self) -> None:
        entries = np.asarray(self.entries, dtype=float)
        if entries.shape != (self.m, self.m):
            raise ValueError(f"entries must be {self.m}x{self.m}, got {entries.shape}")
        if not np.allclose(entries, entries.T, rtol=1e-12, atol=0.0):
            raise ValueError("fisher matrix must be symmetric")
        object.__setattr__(self, "entries", entries)

    def is_psd(self, tol: float = PSD_TOL) -> bool:
        scale = max(1.0, float(np.max(np.abs(self.entries))))
        return bool(np.all(np.linalg.eigvalsh(self.entries) >= -tol * scale))


def channel_coefficients(n_modes: int, channels: Sequence[HomodyneChannel]) -> np.ndarray:
    """Rows c_k with X_k = c_k . A (weights not applied)."""
    if not channels:
        raise ValueError("at least one channel is required")
    modes = [ModeSelector(ch.mode).checked(n_modes) for ch in channels]
    if len(set(modes)) != len(modes):
        raise ValueError(f"channels must reference distinct modes, got {modes}")
    coefficients = np.zeros((len(channels), 2 * n_modes), dtype=complex)
    for row, (mode, channel) in enumerate(zip(modes, channels)):
        coefficients[row, mode] = np.exp(1j * channel.theta)
        coefficients[row, n_modes + mode] = np.exp(-1j * channel.theta)
    return coefficients


def joint_quadrature_stats(
    state: GaussianState, channels: Sequence[HomodyneChannel]
) -> QuadratureStats:
    coefficients = channel_coefficients(state.n_modes, channels)
    means = (coefficients @ state.d).real
    # symmetrized covariance: 1/2 <{dX_k, dX_l}> = 1/2 c_k^T sigma conj(c_l)
    covariance = 0.5 * (coefficients @ state.sigma @ coefficients.conj().T).real
    covariance = 0.5 * (covariance + covariance.T)
    weights = np.array([ch.weight for ch in channels], dtype=float)
    return QuadratureStats(
        mean=float(weights @ means),
        variance=float(weights @ covariance @ weights),
        channel_means=means,
        cross_covariance_matrix=covariance,
    )


def signal_slope(
    state_builder: StateBuilder,
    channels: Sequence[HomodyneChannel],
    phases: Sequence[float],
    step: float = DEFAULT_SLOPE_STEP,
) -> float:
    """d<X_+>/d phi with every phase moved together by phi."""
    if step <= 0:
        raise ValueError("step must be positive")
    base = np.asarray(phases, dtype=float)
    upper = joint_quadrature_stats(state_builder(base + step), channels).mean
    lower = joint_quadrature_stats(state_builder(base - step), channels).mean
    return (upper - lower) / (2.0 * step)


def lod(slope: float, variance: float) -> float:
    if slope == 0:
        raise SingularEstimatorError("signal slope is zero, phase is not estimable")
    if variance < 0:
        raise ValueError(f"variance must be non-negative, got {variance}")
    return variance / (slope * slope)


def snr(slope: float, variance: float, delta_phi_sq: float) -> float:
    if variance <= 0:
        raise ValueError(f"variance must be positive, got {variance}")
    return slope * slope * delta_phi_sq / variance


def qfi_matrix(
    state_builder: StateBuilder,
    phases: Sequence[float],
    step: float = DEFAULT_QFI_STEP,
) -> FisherMatrix:
    """
    Bright-beam QFI F_ij = 2 d_i(d)^dag sigma^-1 d_j(d), displacement derivatives
    by central differences.
    """
    if step <= 0:
        raise ValueError("step must be positive")
    base = np.asarray(phases, dtype=float)
    m = base.size
    sigma = state_builder(base).sigma
    derivatives = []
    for i in range(m):
        shift = np.zeros(m)
        shift[i] = step
        upper = state_builder(base + shift).d
        lower = state_builder(base - shift).d
        derivatives.append((upper - lower) / (2.0 * step))
    gradient = np.column_stack(derivatives)
    try:
        solved = linalg.solve(sigma, gradient, assume_a="her")
    except linalg.LinAlgError as exc:
        raise SingularMatrixError("covariance matrix is singular") from exc
    entries = 2.0 * (gradient.conj().T @ solved).real
    entries = 0.5 * (entries + entries.T)
    logger.debug("qfi matrix for %s phases: %s", m, entries.tolist())
    return FisherMatrix(m=m, entries=entries)


def qcrb(fisher: FisherMatrix, beta: Sequence[float]) -> float:
    weights = np.asarray(beta, dtype=float)
    if weights.shape != (fisher.m,):
        raise ValueError(f"beta must have {fisher.m} entries, got {weights.shape}")
    if abs(np.sum(np.abs(weights)) - 1.0) > BETA_NORM_TOL:
        raise ValueError(f"beta must satisfy sum |beta_k| = 1, got {weights.tolist()}")
    if np.linalg.matrix_rank(fisher.entries) < fisher.m:
        raise SingularMatrixError("fisher matrix is singular")
    try:
        solved = linalg.solve(fisher.entries, weights, assume_a="sym")
    except linalg.LinAlgError as exc:
        raise SingularMatrixError("fisher matrix is singular") from exc
    return float(weights @ solved)


def db(ratio: float) -> float:
    if ratio <= 0:
        raise ValueError(f"ratio must be positive, got {ratio}")
    return 10.0 * math.log10(ratio)


def undb(level_db: float) -> float:
    return 10.0 ** (level_db / 10.0)


def add_powers_dbm(*levels_dbm: float) -> float:
    """Incoherent sum of powers given in dBm."""
    if not levels_dbm:
        raise ValueError("at least one power level is required")
    return db(sum(undb(level) for level in levels_dbm))


def snr_correct(measured_dbm: float, noise_dbm: float) -> float:
    """
    SNR in dB of the signal alone, removing the noise power that the
    spectrum analyzer adds to the measured signal trace.
    """
    gap = measured_dbm - noise_dbm
    if gap <= 0:
        raise UndefinedSignalError(
            f"measured {measured_dbm} dBm does not exceed noise {noise_dbm} dBm"
        )
    # 10 log10(10^(gap/10) - 1) rewritten so large gaps do not overflow
    return gap + 10.0 * math.log10(-math.expm1(-gap * math.log(10.0) / 10.0))
