"""
Gaussian states in ladder ordering A = (a_1..a_n, a_1^dag..a_n^dag).

d_i = <A_i>, sigma_ij = <A_i A_j^dag + A_j^dag A_i> - 2 <A_i><A_j^dag>, so the
vacuum has sigma = identity. Every operation returns a new state.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.linalg import dft


logger = logging.getLogger(__name__)

STRUCTURE_TOL = 1e-12


@dataclass(frozen=True)
class ModeSelector:
    index: int

    def checked(self, n_modes: int) -> int:
        if not 0 <= self.index < n_modes:
            raise ValueError(f"mode {self.index} out of range for {n_modes} modes")
        return self.index


def _mode(index: int, n_modes: int) -> int:
    return ModeSelector(int(index)).checked(n_modes)


def _distinct(modes: Sequence[int], n_modes: int) -> list[int]:
    checked = [_mode(m, n_modes) for m in modes]
    if len(set(checked)) != len(checked):
        raise ValueError(f"modes must be distinct, got {list(modes)}")
    return checked


def _frozen(array: np.ndarray) -> np.ndarray:
    array = np.array(array, dtype=complex)
    array.setflags(write=False)
    return array


@dataclass(frozen=True)
class GaussianState:
    n_modes: int
    d: np.ndarray
    sigma: np.ndarray

    def __post_init__(self) -> None:
        if self.n_modes < 1:
            raise ValueError("n_modes must be at least 1")
        size = 2 * self.n_modes
        d = _frozen(self.d)
        sigma = _frozen(self.sigma)
        if d.shape != (size,):
            raise ValueError(f"d must have shape ({size},), got {d.shape}")
        if sigma.shape != (size, size):
            raise ValueError(f"sigma must have shape ({size}, {size}), got {sigma.shape}")
        object.__setattr__(self, "d", d)
        object.__setattr__(self, "sigma", sigma)

    @property
    def amplitudes(self) -> np.ndarray:
        return self.d[: self.n_modes]

    def is_physical(self, tol: float = STRUCTURE_TOL) -> bool:
        n = self.n_modes
        conjugate_ok = np.allclose(self.d[n:], np.conj(self.d[:n]), rtol=0, atol=tol)
        hermitian_ok = np.allclose(self.sigma, self.sigma.conj().T, rtol=0, atol=tol)
        diagonal_ok = bool(np.all(self.sigma.diagonal().real >= 1 - tol))
        return bool(conjugate_ok and hermitian_ok and diagonal_ok)


def _from_annihilation(amplitudes: np.ndarray, sigma: np.ndarray) -> GaussianState:
    amplitudes = np.asarray(amplitudes, dtype=complex)
    sigma = 0.5 * (sigma + sigma.conj().T)
    return GaussianState(
        n_modes=amplitudes.size,
        d=np.concatenate([amplitudes, amplitudes.conj()]),
        sigma=sigma,
    )


@dataclass(frozen=True)
class SymplecticTransform:
    """Bogoliubov map A -> S A with S = [[U, V], [conj(V), conj(U)]]."""

    n_modes: int
    matrix: np.ndarray

    def __post_init__(self) -> None:
        size = 2 * self.n_modes
        matrix = _frozen(self.matrix)
        if matrix.shape != (size, size):
            raise ValueError(f"matrix must have shape ({size}, {size}), got {matrix.shape}")
        object.__setattr__(self, "matrix", matrix)

    @classmethod
    def from_blocks(cls, u: np.ndarray, v: np.ndarray | None = None) -> "SymplecticTransform":
        u = np.atleast_2d(np.asarray(u, dtype=complex))
        v = np.zeros_like(u) if v is None else np.atleast_2d(np.asarray(v, dtype=complex))
        matrix = np.block([[u, v], [v.conj(), u.conj()]])
        return cls(n_modes=u.shape[0], matrix=matrix)

    @property
    def u(self) -> np.ndarray:
        return self.matrix[: self.n_modes, : self.n_modes]

    @property
    def v(self) -> np.ndarray:
        return self.matrix[: self.n_modes, self.n_modes :]

    def is_bogoliubov(self, tol: float = STRUCTURE_TOL) -> bool:
        u, v = self.u, self.v
        identity = np.identity(self.n_modes)
        commutator_ok = np.allclose(u @ u.conj().T - v @ v.conj().T, identity, rtol=0, atol=tol)
        symmetric = u @ v.T
        symmetry_ok = np.allclose(symmetric, symmetric.T, rtol=0, atol=tol)
        return bool(commutator_ok and symmetry_ok)

    def compose(self, other: "SymplecticTransform") -> "SymplecticTransform":
        """Transform that applies `other` first, then `self`."""
        if other.n_modes != self.n_modes:
            raise ValueError("cannot compose transforms on different mode counts")
        return SymplecticTransform(self.n_modes, self.matrix @ other.matrix)

    def embed(self, n_modes: int, modes: Sequence[int]) -> "SymplecticTransform":
        modes = _distinct(modes, n_modes)
        if len(modes) != self.n_modes:
            raise ValueError(f"transform acts on {self.n_modes} modes, got {len(modes)}")
        u = np.identity(n_modes, dtype=complex)
        v = np.zeros((n_modes, n_modes), dtype=complex)
        index = np.ix_(modes, modes)
        u[index] = self.u
        v[index] = self.v
        return SymplecticTransform.from_blocks(u, v)


def two_mode_squeezer(G: float) -> SymplecticTransform:
    """a -> sqrt(G) a + sqrt(G-1) b^dag, b -> sqrt(G) b + sqrt(G-1) a^dag."""
    if G < 1:
        raise ValueError(f"gain G must be >= 1, got {G}")
    u = math.sqrt(G) * np.identity(2)
    v = math.sqrt(G - 1.0) * np.array([[0.0, 1.0], [1.0, 0.0]])
    return SymplecticTransform.from_blocks(u, v)


def single_mode_squeezer(r: float, angle: float = 0.0) -> SymplecticTransform:
    """a -> cosh(r) a - e^{i angle} sinh(r) a^dag."""
    u = np.array([[math.cosh(r)]])
    v = np.array([[-np.exp(1j * angle) * math.sinh(r)]])
    return SymplecticTransform.from_blocks(u, v)


def phase_rotation(phi: float) -> SymplecticTransform:
    return SymplecticTransform.from_blocks(np.array([[np.exp(-1j * phi)]]))


def beam_splitter_transform(t: float, phase: float = 0.0) -> SymplecticTransform:
    """Power transmissivity t: a -> sqrt(t) a + e^{i phase} sqrt(1-t) b."""
    if not 0.0 <= t <= 1.0:
        raise ValueError(f"transmissivity must lie in [0, 1], got {t}")
    reflect = math.sqrt(1.0 - t)
    u = np.array(
        [
            [math.sqrt(t), np.exp(1j * phase) * reflect],
            [-np.exp(-1j * phase) * reflect, math.sqrt(t)],
        ]
    )
    return SymplecticTransform.from_blocks(u)


def balanced_splitter(d_ways: int, port_phases: Sequence[float] | None = None) -> SymplecticTransform:
    """
    Unitary on d_ways modes whose first column is uniformly 1/sqrt(d_ways).
    Only the map of input 0 matters physically; the other columns complete it
    to a unitary (normalized DFT). Optional port phases rotate the outputs.
    """
    if d_ways < 1:
        raise ValueError("d_ways must be at least 1")
    u = dft(d_ways, scale="sqrtn")
    if port_phases is not None:
        phases = np.asarray(port_phases, dtype=float)
        if phases.shape != (d_ways,):
            raise ValueError(f"expected {d_ways} port phases, got {phases.shape}")
        u = np.diag(np.exp(-1j * phases)) @ u
    return SymplecticTransform.from_blocks(u)


def apply_transform(
    state: GaussianState, transform: SymplecticTransform, modes: Sequence[int]
) -> GaussianState:
    full = transform.embed(state.n_modes, modes).matrix
    d = full @ state.d
    sigma = full @ state.sigma @ full.conj().T
    return _from_annihilation(d[: state.n_modes], sigma)


def vacuum(n_modes: int) -> GaussianState:
    if n_modes < 1:
        raise ValueError("n_modes must be at least 1")
    size = 2 * n_modes
    return GaussianState(
        n_modes=n_modes,
        d=np.zeros(size, dtype=complex),
        sigma=np.identity(size, dtype=complex),
    )


def displace(state: GaussianState, mode: int, amplitude: complex) -> GaussianState:
    mode = _mode(mode, state.n_modes)
    amplitudes = np.array(state.amplitudes)
    amplitudes[mode] += amplitude
    return _from_annihilation(amplitudes, np.array(state.sigma))


def two_mode_squeeze(state: GaussianState, mode_a: int, mode_b: int, G: float) -> GaussianState:
    if G == 1.0:
        _distinct([mode_a, mode_b], state.n_modes)
        return state
    return apply_transform(state, two_mode_squeezer(G), [mode_a, mode_b])


def squeeze(state: GaussianState, mode: int, r: float, angle: float = 0.0) -> GaussianState:
    return apply_transform(state, single_mode_squeezer(r, angle), [mode])


def phase_shift(state: GaussianState, mode: int, phi: float) -> GaussianState:
    return apply_transform(state, phase_rotation(phi), [mode])


def beam_splitter(
    state: GaussianState, mode_a: int, mode_b: int, t: float, phase: float = 0.0
) -> GaussianState:
    return apply_transform(state, beam_splitter_transform(t, phase), [mode_a, mode_b])


def adjoin_vacuum(state: GaussianState, count: int) -> GaussianState:
    """Append `count` vacuum modes after the existing ones."""
    if count < 0:
        raise ValueError("count must be non-negative")
    if count == 0:
        return state
    n = state.n_modes
    total = n + count
    old = list(range(n)) + list(range(total, total + n))
    d = np.zeros(2 * total, dtype=complex)
    d[old] = state.d
    sigma = np.identity(2 * total, dtype=complex)
    sigma[np.ix_(old, old)] = state.sigma
    return GaussianState(n_modes=total, d=d, sigma=sigma)


def _select(state: GaussianState, modes: Sequence[int]) -> GaussianState:
    n = state.n_modes
    index = list(modes) + [n + m for m in modes]
    return GaussianState(
        n_modes=len(modes),
        d=state.d[index],
        sigma=state.sigma[np.ix_(index, index)],
    )


def trace_out(state: GaussianState, modes: Sequence[int]) -> GaussianState:
    dropped = set(_distinct(modes, state.n_modes))
    keep = [m for m in range(state.n_modes) if m not in dropped]
    if not keep:
        raise ValueError("cannot trace out every mode")
    return _select(state, keep)


def permute_modes(state: GaussianState, order: Sequence[int]) -> GaussianState:
    """Mode i of the result is mode order[i] of the input."""
    order = _distinct(order, state.n_modes)
    if len(order) != state.n_modes:
        raise ValueError("order must list every mode exactly once")
    return _select(state, order)


def loss(state: GaussianState, mode: int, eta: float) -> GaussianState:
    if not 0.0 <= eta <= 1.0:
        raise ValueError(f"eta must lie in [0, 1], got {eta}")
    mode = _mode(mode, state.n_modes)
    if eta == 1.0:
        return state
    ancilla = state.n_modes
    widened = adjoin_vacuum(state, 1)
    mixed = beam_splitter(widened, mode, ancilla, eta)
    return trace_out(mixed, [ancilla])


def balanced_split(
    state: GaussianState,
    mode: int,
    d_ways: int,
    port_phases: Sequence[float] | None = None,
) -> GaussianState:
    """
    Split `mode` into d_ways equal-amplitude modes. The outputs occupy
    positions mode..mode+d_ways-1; later modes shift up by d_ways-1.
    """
    if d_ways < 1:
        raise ValueError("d_ways must be at least 1")
    mode = _mode(mode, state.n_modes)
    if d_ways == 1 and port_phases is None:
        return state
    n = state.n_modes
    extra = list(range(n, n + d_ways - 1))
    widened = adjoin_vacuum(state, d_ways - 1)
    split = apply_transform(widened, balanced_splitter(d_ways, port_phases), [mode, *extra])
    order = list(range(mode + 1)) + extra + list(range(mode + 1, n))
    logger.debug("balanced split of mode %s into %s ways", mode, d_ways)
    return permute_modes(split, order)


def mean_photons(state: GaussianState, mode: int) -> float:
    mode = _mode(mode, state.n_modes)
    amplitude = state.d[mode]
    return float(0.5 * (state.sigma[mode, mode].real - 1.0) + abs(amplitude) ** 2)


def total_photons(state: GaussianState) -> float:
    return sum(mean_photons(state, m) for m in range(state.n_modes))
