"""
Closed-form sensitivities and state builders for the two-phase truncated
SU(1,1) sensors and the M-phase sensor networks.

Two-phase schemes estimate phi = beta1*phi1 + beta2*phi2 from
X_+ = X_1 + g X_2 with both LO phases at pi/2. M-phase schemes estimate the
average of M phases, lossless.
"""
from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, field, replace
from enum import Enum
from typing import Any, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from scipy.optimize import brentq, minimize_scalar

from errors import NumericalError
from gauss_core import (
    GaussianState,
    balanced_split,
    displace,
    loss,
    phase_shift,
    squeeze,
    two_mode_squeeze,
    vacuum,
)
from metrology import (
    DEFAULT_SLOPE_STEP,
    HomodyneChannel,
    StateBuilder,
    db,
    joint_quadrature_stats,
    lod,
    signal_slope,
)


logger = logging.getLogger(__name__)

BRIGHT_BEAM_MIN = 10.0


class Scheme(str, Enum):
    TSU_DISTRIBUTED = "tsu-distributed"
    TSU_SEPARABLE = "tsu-separable"
    CLASSICAL_DISTRIBUTED = "classical-distributed"
    CLASSICAL_SEPARABLE = "classical-separable"
    MULTI_CLASSICAL = "multi-classical"
    MULTI_SEPARABLE = "multi-separable"
    MULTI_ENTANGLED = "multi-entangled"

    @property
    def multi_phase(self) -> bool:
        return self.value.startswith("multi-")


@dataclass(frozen=True)
class InterferometerParams:
    G: float
    alpha_sq: float
    eta: float = 1.0
    g: float = 1.0
    phi1: float = 0.0
    phi2: float = 0.0

    def __post_init__(self) -> None:
        if not self.G >= 1.0:
            raise ValueError(f"gain G must be >= 1, got {self.G}")
        if not self.alpha_sq >= 0.0:
            raise ValueError(f"alpha_sq must be >= 0, got {self.alpha_sq}")
        if not 0.0 < self.eta <= 1.0:
            raise ValueError(f"eta must lie in (0, 1], got {self.eta}")
        if not self.g > 0.0:
            raise ValueError(f"classical gain g must be > 0, got {self.g}")
        if not (math.isfinite(self.phi1) and math.isfinite(self.phi2)):
            raise ValueError("phases must be finite")

    @property
    def bright_beam(self) -> bool:
        return self.alpha_sq >= BRIGHT_BEAM_MIN


@dataclass(frozen=True)
class MultiPhaseParams:
    M: int
    n: float
    G: float | None = None
    alpha_sq: float | None = None
    eta: float = 1.0

    def __post_init__(self) -> None:
        if self.M < 1:
            raise ValueError(f"M must be >= 1, got {self.M}")
        if not self.n > 0.0:
            raise ValueError(f"n must be > 0, got {self.n}")
        if self.eta != 1.0:
            raise ValueError("multi-phase schemes are evaluated lossless, eta must be 1")
        if (self.G is None) != (self.alpha_sq is None):
            raise ValueError("G and alpha_sq must be given together")
        if self.G is not None and not self.G >= 1.0:
            raise ValueError(f"gain G must be >= 1, got {self.G}")
        if self.alpha_sq is not None and not self.alpha_sq > 0.0:
            raise ValueError(f"alpha_sq must be > 0, got {self.alpha_sq}")


@dataclass(frozen=True)
class BetaWeights:
    beta1: float
    beta2: float

    def as_vector(self) -> np.ndarray:
        return np.array([self.beta1, self.beta2])


@dataclass(frozen=True)
class LodResult:
    scheme: Scheme
    delta_phi_sq: float
    params: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not (math.isfinite(self.delta_phi_sq) and self.delta_phi_sq > 0.0):
            raise NumericalError(f"{self.scheme.value}: LOD is not positive and finite")

    def scaled(self, alpha_sq: float) -> float:
        return self.delta_phi_sq * alpha_sq


@dataclass(frozen=True)
class AdvantageWindow:
    g_lo: float
    g_hi: float

    def contains(self, g: float) -> bool:
        return self.g_lo < g < self.g_hi


class SolverConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    xatol: float = Field(default=1e-10, gt=0)
    maxiter: int = Field(default=500, ge=10)


@dataclass(frozen=True)
class EntangledOptimum:
    G: float
    alpha_sq: float
    lod: float


def _require_seed(alpha_sq: float) -> None:
    if alpha_sq <= 0.0:
        raise ValueError("alpha_sq must be > 0 for a finite LOD")


def _require_even(M: int) -> None:
    if M < 2 or M % 2:
        raise ValueError(f"entangled scheme needs an even M >= 2, got {M}")


def _signal_gain(G: float, g: float) -> float:
    return math.sqrt(G) + g * math.sqrt(G - 1.0)


def _tsu_noise(G: float, eta: float, g: float) -> float:
    """Variance of X_+ at zero phase."""
    return (g * g + 1.0) * (1.0 - 2.0 * eta + 2.0 * eta * G) - 4.0 * g * eta * math.sqrt(
        G * (G - 1.0)
    )


def beta_weights(G: float, g: float) -> BetaWeights:
    if G < 1.0:
        raise ValueError(f"gain G must be >= 1, got {G}")
    if g <= 0.0:
        raise ValueError(f"classical gain g must be > 0, got {g}")
    root_g = math.sqrt(G)
    total = _signal_gain(G, g)
    beta1 = root_g / total
    return BetaWeights(beta1=beta1, beta2=1.0 - beta1)


def lod_tsu_distributed(params: InterferometerParams) -> LodResult:
    _require_seed(params.alpha_sq)
    amp = _signal_gain(params.G, params.g)
    value = _tsu_noise(params.G, params.eta, params.g) / (
        4.0 * params.alpha_sq * params.eta * amp * amp
    )
    return LodResult(Scheme.TSU_DISTRIBUTED, value, asdict(params))


def lod_tsu_separable(params: InterferometerParams) -> LodResult:
    value = 2.0 * lod_tsu_distributed(params).delta_phi_sq
    return LodResult(Scheme.TSU_SEPARABLE, value, asdict(params))


def lod_classical_distributed(params: InterferometerParams) -> LodResult:
    _require_seed(params.alpha_sq)
    amp = _signal_gain(params.G, params.g)
    value = (params.g * params.g + 1.0) / (4.0 * params.alpha_sq * params.eta * amp * amp)
    return LodResult(Scheme.CLASSICAL_DISTRIBUTED, value, asdict(params))


def lod_classical_separable(params: InterferometerParams) -> LodResult:
    value = 2.0 * lod_classical_distributed(params).delta_phi_sq
    return LodResult(Scheme.CLASSICAL_SEPARABLE, value, asdict(params))


def qcrb_tsu(params: InterferometerParams) -> float:
    _require_seed(params.alpha_sq)
    G, eta = params.G, params.eta
    amp = _signal_gain(G, 1.0)
    return (1.0 - 2.0 * eta + 2.0 * eta * G - 2.0 * eta * math.sqrt(G * (G - 1.0))) / (
        2.0 * params.alpha_sq * eta * amp * amp
    )


def advantage_g_window(G: float, eta: float) -> AdvantageWindow | None:
    """
    Range of g where the tSU LOD beats the classical one. Both LODs share the
    denominator, so the boundary is the quadratic in g where their numerators
    meet. None when the quadratic has no real roots.
    """
    if G <= 1.0:
        raise ValueError(f"advantage window needs G > 1, got {G}")
    if not 0.0 < eta <= 1.0:
        raise ValueError(f"eta must lie in (0, 1], got {eta}")
    a = 2.0 * eta * (G - 1.0)
    b = -4.0 * eta * math.sqrt(G * (G - 1.0))
    disc = b * b - 4.0 * a * a
    if disc < 0.0:
        logger.info("no quantum advantage window for G=%s eta=%s", G, eta)
        return None
    root = math.sqrt(disc)
    return AdvantageWindow(g_lo=(-b - root) / (2.0 * a), g_hi=(-b + root) / (2.0 * a))


def probe_photons(params: InterferometerParams) -> float:
    return params.eta * (params.G - 1.0 + params.G * params.alpha_sq)


def conjugate_photons(params: InterferometerParams) -> float:
    return params.eta * (params.G - 1.0) * (1.0 + params.alpha_sq)


def n_total(G: float, alpha_sq: float) -> float:
    """Photons leaving the amplifier when both inputs carry |alpha|^2."""
    if G < 1.0:
        raise ValueError(f"gain G must be >= 1, got {G}")
    return 2.0 * (G - 1.0) + 4.0 * G * alpha_sq + 2.0 * alpha_sq * (
        -1.0 + 2.0 * math.sqrt(G * (G - 1.0))
    )


def noise_reduction_db(G: float, eta: float, g: float = 1.0) -> float:
    """Joint-quadrature noise below the coherent benchmark g^2+1, in dB."""
    return -db(_tsu_noise(G, eta, g) / (g * g + 1.0))


def eta_for_noise_reduction(G: float, target_db: float, g: float = 1.0) -> float:
    if target_db <= 0.0:
        raise ValueError("target noise reduction must be positive")
    best = noise_reduction_db(G, 1.0, g)
    if target_db > best:
        raise ValueError(f"G={G}, g={g} reaches at most {best:.4f} dB")
    return brentq(lambda eta: noise_reduction_db(G, eta, g) - target_db, 1e-12, 1.0, xtol=1e-14)


def lod_multi_classical(M: int, n: float) -> LodResult:
    params = MultiPhaseParams(M=M, n=n)
    return LodResult(Scheme.MULTI_CLASSICAL, 1.0 / (4.0 * M * n), asdict(params))


def lod_multi_separable(M: int, n: float) -> LodResult:
    params = MultiPhaseParams(M=M, n=n)
    return LodResult(Scheme.MULTI_SEPARABLE, 1.0 / (4.0 * M * n * (n + 1.0)), asdict(params))


def lod_multi_entangled_raw(G: float, alpha_sq: float) -> float:
    """Entangled network LOD at fixed gain and seed; independent of M."""
    if G < 1.0:
        raise ValueError(f"gain G must be >= 1, got {G}")
    _require_seed(alpha_sq)
    amp = _signal_gain(G, 1.0)
    return (-1.0 + 2.0 * G - 2.0 * math.sqrt(G * (G - 1.0))) / (8.0 * alpha_sq * amp * amp)


def lod_multi_entangled_optimal(M: int, n: float) -> LodResult:
    _require_even(M)
    params = MultiPhaseParams(M=M, n=n)
    return LodResult(
        Scheme.MULTI_ENTANGLED, 1.0 / (2.0 * M * n * (M * n + 2.0)), asdict(params)
    )


def seed_for_budget(M: int, n: float, G: float) -> float:
    """|alpha|^2 that puts n photons on each of the M phase elements."""
    gain = 2.0 * G - 1.0 + 2.0 * math.sqrt(G * (G - 1.0))
    return (M * n - 2.0 * (G - 1.0)) / (2.0 * gain)


def optimize_entangled(
    M: int, n: float, solver_config: SolverConfig | None = None
) -> EntangledOptimum:
    """
    Minimize the entangled LOD under n_total(G, |alpha|^2) = M n. The budget
    fixes |alpha|^2 for each G, leaving a bounded search over G.
    """
    _require_even(M)
    if not n > 0.0:
        raise ValueError(f"n must be > 0, got {n}")
    config = solver_config or SolverConfig()
    budget = M * n
    upper = 1.0 + budget / 2.0

    def objective(G: float) -> float:
        alpha_sq = seed_for_budget(M, n, G)
        if alpha_sq <= 0.0:
            return math.inf
        return lod_multi_entangled_raw(G, alpha_sq)

    result = minimize_scalar(
        objective,
        bounds=(1.0, upper),
        method="bounded",
        options={"xatol": config.xatol, "maxiter": config.maxiter},
    )
    if not result.success:
        raise NumericalError(f"entangled optimization failed: {result.message}")
    G_opt = float(result.x)
    alpha_sq = seed_for_budget(M, n, G_opt)
    value = lod_multi_entangled_raw(G_opt, alpha_sq)
    logger.info(
        "entangled optimum M=%s n=%s: G=%.6g alpha_sq=%.6g lod=%.6g (%s evaluations)",
        M, n, G_opt, alpha_sq, value, result.nfev,
    )
    return EntangledOptimum(G=G_opt, alpha_sq=alpha_sq, lod=value)


def optimal_separable_squeezing(n: float) -> tuple[float, float]:
    """(r, |displacement|^2) minimizing the single-mode LOD with n photons."""
    if not n > 0.0:
        raise ValueError(f"n must be > 0, got {n}")
    x = 2.0 * n + 1.0
    squeezed = (x + 1.0 / x - 2.0) / 4.0
    return 0.5 * math.log(x), n - squeezed


def build_tsu_distributed(params: InterferometerParams) -> GaussianState:
    state = displace(vacuum(2), 0, math.sqrt(params.alpha_sq))
    state = two_mode_squeeze(state, 0, 1, params.G)
    state = phase_shift(state, 0, params.phi1)
    state = phase_shift(state, 1, params.phi2)
    state = loss(state, 0, params.eta)
    return loss(state, 1, params.eta)


def build_tsu_separable(params: InterferometerParams) -> GaussianState:
    # modes (0, 1) sense phi1 on the probe, modes (2, 3) sense phi2 on the conjugate
    seed = math.sqrt(params.alpha_sq)
    state = displace(displace(vacuum(4), 0, seed), 2, seed)
    state = two_mode_squeeze(state, 0, 1, params.G)
    state = two_mode_squeeze(state, 2, 3, params.G)
    state = phase_shift(state, 0, params.phi1)
    state = phase_shift(state, 3, params.phi2)
    for mode in range(4):
        state = loss(state, mode, params.eta)
    return state


def _classical_beams(params: InterferometerParams, copies: int) -> GaussianState:
    probe = math.sqrt(params.G * params.alpha_sq)
    conjugate = math.sqrt((params.G - 1.0) * params.alpha_sq)
    state = vacuum(2 * copies)
    for copy in range(copies):
        state = displace(state, 2 * copy, probe)
        state = displace(state, 2 * copy + 1, conjugate)
    return state


def build_classical_distributed(params: InterferometerParams) -> GaussianState:
    state = _classical_beams(params, copies=1)
    state = phase_shift(state, 0, params.phi1)
    state = phase_shift(state, 1, params.phi2)
    state = loss(state, 0, params.eta)
    return loss(state, 1, params.eta)


def build_classical_separable(params: InterferometerParams) -> GaussianState:
    state = _classical_beams(params, copies=2)
    state = phase_shift(state, 0, params.phi1)
    state = phase_shift(state, 3, params.phi2)
    for mode in range(4):
        state = loss(state, mode, params.eta)
    return state


def _phase_vector(M: int, phases: Sequence[float] | None) -> np.ndarray:
    values = np.zeros(M) if phases is None else np.asarray(phases, dtype=float)
    if values.shape != (M,):
        raise ValueError(f"expected {M} phases, got shape {values.shape}")
    return values


def _apply_phases(state: GaussianState, phases: np.ndarray) -> GaussianState:
    for mode, phi in enumerate(phases):
        state = phase_shift(state, mode, float(phi))
    return state


def build_multi_entangled(
    M: int,
    G: float,
    alpha_sq: float,
    phases: Sequence[float] | None = None,
    port_phases: Sequence[float] | None = None,
) -> GaussianState:
    """
    Both amplifier inputs seeded with |alpha|^2, each output split M/2 ways.
    Modes 0..M/2-1 carry the probe arm, M/2..M-1 the conjugate arm.
    """
    _require_even(M)
    values = _phase_vector(M, phases)
    ways = M // 2
    arm_a = arm_b = None
    if port_phases is not None:
        ports = np.asarray(port_phases, dtype=float)
        if ports.shape != (M,):
            raise ValueError(f"expected {M} port phases, got shape {ports.shape}")
        arm_a, arm_b = ports[:ways], ports[ways:]
    seed = math.sqrt(alpha_sq)
    state = displace(displace(vacuum(2), 0, seed), 1, seed)
    state = two_mode_squeeze(state, 0, 1, G)
    state = balanced_split(state, 0, ways, arm_a)
    state = balanced_split(state, ways, ways, arm_b)
    return _apply_phases(state, values)


def build_multi_classical(M: int, n: float, phases: Sequence[float] | None = None) -> GaussianState:
    values = _phase_vector(M, phases)
    state = displace(vacuum(1), 0, math.sqrt(M * n))
    state = balanced_split(state, 0, M)
    return _apply_phases(state, values)


def build_multi_separable(M: int, n: float, phases: Sequence[float] | None = None) -> GaussianState:
    values = _phase_vector(M, phases)
    r, displacement_sq = optimal_separable_squeezing(n)
    state = vacuum(M)
    for mode in range(M):
        # angle pi squeezes the phase quadrature read out at theta = pi/2
        state = squeeze(state, mode, r, math.pi)
        state = displace(state, mode, math.sqrt(displacement_sq))
    return _apply_phases(state, values)


def two_phase_channels(g: float, copies: int = 1) -> tuple[HomodyneChannel, ...]:
    channels: list[HomodyneChannel] = []
    for copy in range(copies):
        channels.append(HomodyneChannel(mode=2 * copy))
        channels.append(HomodyneChannel(mode=2 * copy + 1, weight=g))
    return tuple(channels)


def multi_channels(M: int) -> tuple[HomodyneChannel, ...]:
    return tuple(HomodyneChannel(mode=j) for j in range(M))


@dataclass(frozen=True)
class SensorSetup:
    scheme: Scheme
    builder: StateBuilder
    channels: tuple[HomodyneChannel, ...]
    operating_phases: np.ndarray
    analytic: LodResult

    @property
    def state(self) -> GaussianState:
        return self.builder(self.operating_phases)


_TWO_PHASE = {
    Scheme.TSU_DISTRIBUTED: (build_tsu_distributed, lod_tsu_distributed, 1),
    Scheme.TSU_SEPARABLE: (build_tsu_separable, lod_tsu_separable, 2),
    Scheme.CLASSICAL_DISTRIBUTED: (build_classical_distributed, lod_classical_distributed, 1),
    Scheme.CLASSICAL_SEPARABLE: (build_classical_separable, lod_classical_separable, 2),
}


def resolve_entangled(params: MultiPhaseParams) -> MultiPhaseParams:
    """Fill in (G, |alpha|^2) from the budget optimum when not given."""
    _require_even(params.M)
    if params.G is not None:
        return params
    optimum = optimize_entangled(params.M, params.n)
    return replace(params, G=optimum.G, alpha_sq=optimum.alpha_sq)


def sensor_setup(
    scheme: Scheme | str, params: InterferometerParams | MultiPhaseParams
) -> SensorSetup:
    scheme = Scheme(scheme)
    if scheme in _TWO_PHASE:
        if not isinstance(params, InterferometerParams):
            raise ValueError(f"{scheme.value} needs InterferometerParams")
        if not params.bright_beam:
            logger.warning(
                "alpha_sq=%s is below %s, bright-beam closed forms may not apply",
                params.alpha_sq, BRIGHT_BEAM_MIN,
            )
        build, closed_form, copies = _TWO_PHASE[scheme]

        def builder(phases: np.ndarray) -> GaussianState:
            return build(replace(params, phi1=float(phases[0]), phi2=float(phases[1])))

        return SensorSetup(
            scheme=scheme,
            builder=builder,
            channels=two_phase_channels(params.g, copies),
            operating_phases=np.array([params.phi1, params.phi2]),
            analytic=closed_form(params),
        )

    if not isinstance(params, MultiPhaseParams):
        raise ValueError(f"{scheme.value} needs MultiPhaseParams")
    M, n = params.M, params.n
    if scheme is Scheme.MULTI_CLASSICAL:
        analytic = lod_multi_classical(M, n)

        def builder(phases: np.ndarray) -> GaussianState:
            return build_multi_classical(M, n, phases)

    elif scheme is Scheme.MULTI_SEPARABLE:
        analytic = lod_multi_separable(M, n)

        def builder(phases: np.ndarray) -> GaussianState:
            return build_multi_separable(M, n, phases)

    else:
        resolved = resolve_entangled(params)
        G, alpha_sq = resolved.G, resolved.alpha_sq
        analytic = LodResult(
            Scheme.MULTI_ENTANGLED, lod_multi_entangled_raw(G, alpha_sq), asdict(resolved)
        )

        def builder(phases: np.ndarray) -> GaussianState:
            return build_multi_entangled(M, G, alpha_sq, phases)

    return SensorSetup(
        scheme=scheme,
        builder=builder,
        channels=multi_channels(M),
        operating_phases=np.zeros(M),
        analytic=analytic,
    )


def pipeline_lod(setup: SensorSetup, step: float = DEFAULT_SLOPE_STEP) -> LodResult:
    """LOD from exact Gaussian statistics of the built state, no sampling."""
    stats = joint_quadrature_stats(setup.state, setup.channels)
    slope = signal_slope(setup.builder, setup.channels, setup.operating_phases, step)
    value = lod(slope, stats.variance)
    logger.debug(
        "%s pipeline: slope=%.12g variance=%.12g lod=%.12g",
        setup.scheme.value, slope, stats.variance, value,
    )
    return LodResult(setup.scheme, value, dict(setup.analytic.params))
