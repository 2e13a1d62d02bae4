from __future__ import annotations

import math

import numpy as np
import pytest

from gauss_core import (
    GaussianState,
    adjoin_vacuum,
    apply_transform,
    balanced_split,
    balanced_splitter,
    beam_splitter,
    beam_splitter_transform,
    displace,
    loss,
    mean_photons,
    permute_modes,
    phase_rotation,
    phase_shift,
    single_mode_squeezer,
    squeeze,
    total_photons,
    trace_out,
    two_mode_squeeze,
    two_mode_squeezer,
    vacuum,
)


def _seeded_pair(G: float = 5.0, alpha_sq: float = 100.0) -> GaussianState:
    return two_mode_squeeze(displace(vacuum(2), 0, math.sqrt(alpha_sq)), 0, 1, G)


def test_vacuum_single_mode():
    state = vacuum(1)
    assert np.allclose(state.d, 0.0)
    assert np.allclose(state.sigma, np.identity(2))


@pytest.mark.parametrize("n_modes", [2, 4])
def test_vacuum_has_no_photons(n_modes):
    state = vacuum(n_modes)
    assert np.allclose(state.sigma, np.identity(2 * n_modes))
    assert all(mean_photons(state, m) == 0.0 for m in range(n_modes))


def test_vacuum_rejects_zero_modes():
    with pytest.raises(ValueError):
        vacuum(0)


def test_state_arrays_are_read_only():
    state = vacuum(1)
    with pytest.raises(ValueError):
        state.d[0] = 1.0


def test_displace_sets_photons():
    assert mean_photons(displace(vacuum(1), 0, 10), 0) == pytest.approx(100.0)


def test_displacements_add():
    state = displace(displace(vacuum(1), 0, 3), 0, 4)
    assert mean_photons(state, 0) == pytest.approx(49.0)
    assert state.is_physical()


def test_displace_rejects_bad_mode():
    with pytest.raises(ValueError):
        displace(vacuum(2), 2, 1.0)


def test_two_mode_squeeze_photon_numbers():
    state = _seeded_pair()
    assert mean_photons(state, 0) == pytest.approx(504.0)
    assert mean_photons(state, 1) == pytest.approx(404.0)


def test_two_mode_squeeze_vacuum_inputs():
    state = two_mode_squeeze(vacuum(2), 0, 1, 5.0)
    assert mean_photons(state, 0) == pytest.approx(4.0)
    assert mean_photons(state, 1) == pytest.approx(4.0)


def test_unit_gain_is_identity():
    state = displace(vacuum(2), 0, 2.0)
    assert two_mode_squeeze(state, 0, 1, 1.0) is state


@pytest.mark.parametrize("G", [0.5, 0.999])
def test_gain_below_one_rejected(G):
    with pytest.raises(ValueError):
        two_mode_squeeze(vacuum(2), 0, 1, G)


def test_two_mode_squeeze_needs_distinct_modes():
    with pytest.raises(ValueError):
        two_mode_squeeze(vacuum(2), 0, 0, 2.0)


@pytest.mark.parametrize(
    "transform",
    [
        two_mode_squeezer(5.0),
        single_mode_squeezer(0.7, 1.1),
        phase_rotation(0.3),
        beam_splitter_transform(0.3, 0.4),
        balanced_splitter(5, [0.1, 0.2, 0.3, 0.4, 0.5]),
    ],
)
def test_transforms_preserve_commutators(transform):
    assert transform.is_bogoliubov()


def test_compose_applies_other_first():
    first = phase_rotation(0.2)
    second = single_mode_squeezer(0.5)
    composed = second.compose(first)
    state = displace(vacuum(1), 0, 2.0)
    direct = squeeze(phase_shift(state, 0, 0.2), 0, 0.5)
    expected = composed.matrix @ state.d
    assert np.allclose(direct.d, expected)


@pytest.mark.parametrize(
    "outer, inner",
    [
        (two_mode_squeezer(5.0), beam_splitter_transform(0.3, 0.4)),
        (balanced_splitter(2, [0.1, 0.2]), two_mode_squeezer(3.0)),
        (single_mode_squeezer(0.7, 1.1), phase_rotation(0.3)),
    ],
)
def test_compose_stays_bogoliubov(outer, inner):
    assert outer.compose(inner).is_bogoliubov()
    assert inner.compose(outer).is_bogoliubov()


@pytest.mark.parametrize(
    "transform",
    [
        two_mode_squeezer(5.0),
        single_mode_squeezer(0.7, 1.1),
        beam_splitter_transform(0.3, 0.4),
        two_mode_squeezer(2.0).compose(balanced_splitter(2)),
    ],
)
def test_vacuum_maps_to_transform_gram(transform):
    n = transform.n_modes
    state = apply_transform(vacuum(n), transform, list(range(n)))
    gram = transform.matrix @ transform.matrix.conj().T
    assert np.allclose(state.d, 0.0, rtol=0, atol=1e-12)
    assert np.allclose(state.sigma, gram, rtol=0, atol=1e-12)
    assert np.all(np.linalg.eigvalsh(state.sigma) > 0.0)


class TestPhaseShift:
    def test_zero_phase(self):
        state = _seeded_pair()
        shifted = phase_shift(state, 0, 0.0)
        assert np.allclose(shifted.d, state.d)
        assert np.allclose(shifted.sigma, state.sigma)

    def test_full_turn(self):
        state = _seeded_pair()
        shifted = phase_shift(state, 0, 2 * math.pi)
        assert np.allclose(shifted.d, state.d, atol=1e-12)
        assert np.allclose(shifted.sigma, state.sigma, atol=1e-12)

    def test_quarter_turn(self):
        shifted = phase_shift(displace(vacuum(1), 0, 10), 0, math.pi / 2)
        assert shifted.d[0] == pytest.approx(-10j, abs=1e-12)


class TestBeamSplitter:
    def test_full_transmission(self):
        state = _seeded_pair()
        mixed = beam_splitter(state, 0, 1, 1.0)
        assert np.allclose(mixed.sigma, state.sigma)
        assert np.allclose(mixed.d, state.d)

    def test_balanced_split_of_coherent_beam(self):
        state = displace(vacuum(2), 0, 10)
        mixed = beam_splitter(state, 0, 1, 0.5)
        assert mean_photons(mixed, 0) == pytest.approx(50.0)
        assert mean_photons(mixed, 1) == pytest.approx(50.0)

    def test_conserves_total_photons(self):
        state = _seeded_pair()
        mixed = beam_splitter(state, 0, 1, 0.5, phase=0.3)
        assert total_photons(mixed) == pytest.approx(total_photons(state))

    @pytest.mark.parametrize("t", [-0.1, 1.5])
    def test_rejects_bad_transmissivity(self, t):
        with pytest.raises(ValueError):
            beam_splitter(vacuum(2), 0, 1, t)


class TestLoss:
    def test_unit_transmission(self):
        state = _seeded_pair()
        assert loss(state, 0, 1.0) is state

    def test_full_loss_resets_mode(self):
        lost = loss(_seeded_pair(), 0, 0.0)
        assert mean_photons(lost, 0) == pytest.approx(0.0, abs=1e-9)
        assert lost.sigma[0, 0].real == pytest.approx(1.0)
        assert lost.d[0] == pytest.approx(0.0)

    def test_photons_scale_linearly(self):
        lost = loss(_seeded_pair(), 0, 0.8)
        assert mean_photons(lost, 0) == pytest.approx(403.2)
        assert mean_photons(lost, 1) == pytest.approx(404.0)
        assert loss(lost, 1, 0.8).n_modes == 2
        assert mean_photons(loss(lost, 1, 0.8), 1) == pytest.approx(323.2)

    @pytest.mark.parametrize("eta", [-0.1, 1.1])
    def test_rejects_bad_eta(self, eta):
        with pytest.raises(ValueError):
            loss(vacuum(1), 0, eta)

    @pytest.mark.parametrize("eta", [0.1, 0.8])
    @pytest.mark.parametrize("phi", [0.3, -2.0])
    @pytest.mark.parametrize("mode", [0, 1])
    def test_commutes_with_phase_shift(self, eta, phi, mode):
        state = _seeded_pair()
        first = loss(phase_shift(state, mode, phi), mode, eta)
        second = phase_shift(loss(state, mode, eta), mode, phi)
        assert np.max(np.abs(first.d - second.d)) <= 1e-12
        assert np.max(np.abs(first.sigma - second.sigma)) <= 1e-12


class TestBalancedSplit:
    def test_single_way_is_identity(self):
        state = displace(vacuum(1), 0, 3.0)
        assert balanced_split(state, 0, 1) is state

    def test_coherent_beam_splits_evenly(self):
        split = balanced_split(displace(vacuum(1), 0, 10), 0, 4)
        assert split.n_modes == 4
        for mode in range(4):
            assert mean_photons(split, mode) == pytest.approx(25.0)

    def test_outputs_follow_split_mode(self):
        state = displace(displace(vacuum(2), 0, 2.0), 1, 7.0)
        split = balanced_split(state, 0, 3)
        assert split.n_modes == 4
        assert mean_photons(split, 3) == pytest.approx(49.0)
        assert [mean_photons(split, m) for m in range(3)] == pytest.approx([4 / 3] * 3)

    def test_split_arms_conserve_photons(self):
        state = two_mode_squeeze(
            displace(displace(vacuum(2), 0, 10.0), 1, 10.0), 0, 1, 5.0
        )
        before = total_photons(state)
        split = balanced_split(balanced_split(state, 0, 2), 2, 2)
        assert split.n_modes == 4
        assert total_photons(split) == pytest.approx(before)
        assert split.is_physical(tol=1e-9)

    def test_port_phases_rotate_outputs(self):
        split = balanced_split(displace(vacuum(1), 0, 4.0), 0, 2, [0.0, math.pi / 2])
        assert split.d[0] == pytest.approx(2 * math.sqrt(2))
        assert split.d[1] == pytest.approx(-2j * math.sqrt(2))


def test_squeezer_adds_sinh_squared_photons():
    squeezed = squeeze(vacuum(1), 0, 0.8, math.pi)
    assert mean_photons(squeezed, 0) == pytest.approx(math.sinh(0.8) ** 2)


def test_adjoin_and_trace_out_round_trip():
    state = _seeded_pair()
    widened = adjoin_vacuum(state, 2)
    assert widened.n_modes == 4
    assert mean_photons(widened, 3) == 0.0
    restored = trace_out(widened, [2, 3])
    assert np.allclose(restored.sigma, state.sigma)
    assert np.allclose(restored.d, state.d)


def test_trace_out_rejects_every_mode():
    with pytest.raises(ValueError):
        trace_out(vacuum(2), [0, 1])


def test_permute_modes_swaps():
    state = displace(vacuum(2), 0, 3.0)
    swapped = permute_modes(state, [1, 0])
    assert mean_photons(swapped, 1) == pytest.approx(9.0)
    assert mean_photons(swapped, 0) == 0.0
    with pytest.raises(ValueError):
        permute_modes(state, [0, 0])
