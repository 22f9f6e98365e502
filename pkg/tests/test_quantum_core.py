"""
tests/test_quantum_core.py
Unit tests for the first-order biphoton algebra in core/quantum_core.py.
"""

import math

import numpy as np
import pytest

from core.quantum_core import (
    ALL_MODES, VACUUM, BeamsplitterConvention, ComplexGain, Detection, OutcomeDistribution,
    PerturbativeKet, Subsystem, Tone, beamsplit_to_eve, expected_pair_count, fidelity,
    joint_probabilities, opa_apply, outcome_distribution, phase_shift, project_eve_vacuum,
)
from utils.errors import PhysicsRangeError

BOB_PAIR = (1, 1, 0, 0)
EVE_PAIR = (0, 0, 1, 1)


def alice_then_bob(g: float, phi: float) -> PerturbativeKet:
    gain = ComplexGain(g)
    ket = phase_shift(opa_apply(PerturbativeKet.vacuum(), gain, 0.0), phi, 0.0)
    return opa_apply(ket, gain, 0.0)


class TestTypes:

    def test_four_modes(self) -> None:
        assert len(set(ALL_MODES)) == 4
        assert sorted(m.index for m in ALL_MODES) == [0, 1, 2, 3]

    def test_gain_above_guard_rejected(self) -> None:
        with pytest.raises(PhysicsRangeError):
            ComplexGain(0.6)

    def test_negative_gain_rejected(self) -> None:
        with pytest.raises(PhysicsRangeError):
            ComplexGain(-0.1)

    def test_gain_in_warning_band_warns(self) -> None:
        with pytest.warns(RuntimeWarning):
            ComplexGain(0.4)

    def test_gain_phase_wrapped(self) -> None:
        assert ComplexGain(0.1, 2 * math.pi + 0.5).phase == pytest.approx(0.5)

    def test_vacuum_amplitude_must_be_one(self) -> None:
        with pytest.raises(PhysicsRangeError):
            PerturbativeKet({VACUUM: 0.5})

    def test_occupation_outside_binary_rejected(self) -> None:
        with pytest.raises(PhysicsRangeError):
            PerturbativeKet({VACUUM: 1.0, (2, 0, 0, 0): 0.1})


class TestOpa:

    def test_single_pass_creates_pair(self) -> None:
        ket = opa_apply(PerturbativeKet.vacuum(), ComplexGain(0.1), 0.0)
        assert ket.amplitude(VACUUM) == 1
        assert ket.amplitude(BOB_PAIR) == pytest.approx(0.1j)

    def test_second_pass_adds_amplitudes(self) -> None:
        phi = 0.7
        ket = alice_then_bob(0.1, phi)
        assert ket.amplitude(BOB_PAIR) == pytest.approx(0.1j * (1 + np.exp(1j * phi)))

    def test_order_two_terms_pruned(self) -> None:
        ket = alice_then_bob(0.1, 0.0)
        assert all(sum(occ) in (0, 2) for occ, _ in ket.items())

    def test_pump_phase_enters_pair_phase(self) -> None:
        ket = opa_apply(PerturbativeKet.vacuum(), ComplexGain(0.1, 0.2), 0.3)
        assert ket.amplitude(BOB_PAIR) == pytest.approx(0.1j * np.exp(0.5j))


class TestPhaseShift:

    def test_pi_on_signal_negates_pair(self) -> None:
        ket = opa_apply(PerturbativeKet.vacuum(), ComplexGain(0.1), 0.0)
        assert phase_shift(ket, math.pi, 0.0).amplitude(BOB_PAIR) == pytest.approx(-0.1j)

    def test_opposite_phases_leave_pair_unchanged(self) -> None:
        ket = opa_apply(PerturbativeKet.vacuum(), ComplexGain(0.1), 0.0)
        assert phase_shift(ket, 0.4, -0.4).amplitude(BOB_PAIR) == pytest.approx(0.1j)

    def test_equal_phases_shift_phase_sum(self) -> None:
        n = expected_pair_count(alice_then_bob(0.1, 0.0))
        gain = ComplexGain(0.1)
        ket = phase_shift(opa_apply(PerturbativeKet.vacuum(), gain, 0.0), math.pi / 4, math.pi / 4)
        shifted = expected_pair_count(opa_apply(ket, gain, 0.0))
        assert n == pytest.approx(0.04)
        assert shifted == pytest.approx(0.02)


class TestInterferenceLaw:

    @pytest.mark.parametrize("g", [0.01, 0.05, 0.1])
    def test_sixteen_point_grid(self, g: float) -> None:
        for k in range(16):
            phi = 2 * math.pi * k / 16
            n = expected_pair_count(alice_then_bob(g, phi))
            assert abs(n - g * g * (2 + 2 * math.cos(phi))) < 1e-12

    def test_quadrature_and_destructive_points(self) -> None:
        assert expected_pair_count(alice_then_bob(0.1, math.pi / 2)) == pytest.approx(0.02)
        assert expected_pair_count(alice_then_bob(0.1, math.pi)) == pytest.approx(0.0, abs=1e-15)

    def test_first_order_norm_bound(self) -> None:
        for g in (0.01, 0.05, 0.1):
            norm = alice_then_bob(g, 0.0).norm_squared()
            assert 1.0 <= norm <= 1.0 + 8 * g * g


class TestBeamsplitter:

    def test_zero_reflectance_is_identity(self) -> None:
        ket = opa_apply(PerturbativeKet.vacuum(), ComplexGain(0.1), 0.0)
        assert beamsplit_to_eve(ket, 0.0) is ket

    def test_symmetric_coefficients(self) -> None:
        ket = opa_apply(PerturbativeKet.vacuum(), ComplexGain(0.1), 0.0)
        out = beamsplit_to_eve(ket, 0.3, BeamsplitterConvention.SYMMETRIC)
        base = 0.1j
        assert out.amplitude(BOB_PAIR) == pytest.approx(0.7 * base)
        assert out.amplitude(EVE_PAIR) == pytest.approx(-0.3 * base)
        assert out.amplitude((1, 0, 0, 1)) == pytest.approx(1j * math.sqrt(0.21) * base)
        assert out.amplitude((0, 1, 1, 0)) == pytest.approx(1j * math.sqrt(0.21) * base)

    def test_real_asymmetric_eve_pair_positive(self) -> None:
        ket = opa_apply(PerturbativeKet.vacuum(), ComplexGain(0.1), 0.0)
        out = beamsplit_to_eve(ket, 0.3)
        assert out.amplitude(EVE_PAIR) == pytest.approx(0.3 * 0.1j)

    def test_full_reflection(self) -> None:
        ket = opa_apply(PerturbativeKet.vacuum(), ComplexGain(0.1), 0.0)
        out = beamsplit_to_eve(ket, 1.0)
        assert out.amplitude(BOB_PAIR) == 0
        assert abs(out.amplitude(EVE_PAIR)) == pytest.approx(0.1)

    @pytest.mark.parametrize("r", [-0.1, 1.3])
    def test_reflectance_out_of_range(self, r: float) -> None:
        with pytest.raises(PhysicsRangeError, match="reflectance out of range"):
            beamsplit_to_eve(PerturbativeKet.vacuum(), r)

    def test_requires_empty_eve_modes(self) -> None:
        ket = beamsplit_to_eve(opa_apply(PerturbativeKet.vacuum(), ComplexGain(0.1), 0.0), 0.5)
        with pytest.raises(PhysicsRangeError):
            beamsplit_to_eve(ket, 0.5)

    def test_unitarity_on_grid(self) -> None:
        for phi in np.linspace(0, 2 * math.pi, 8, endpoint=False):
            ket = phase_shift(opa_apply(PerturbativeKet.vacuum(), ComplexGain(0.1), 0.0), phi, 0.0)
            for r in np.linspace(0, 1, 11):
                for conv in BeamsplitterConvention:
                    split = beamsplit_to_eve(ket, r, conv)
                    assert abs(split.norm_squared() - ket.norm_squared()) < 1e-12
                    assert sum(joint_probabilities(split).values()) == pytest.approx(1.0, abs=1e-12)

    def test_conventions_share_bob_marginals(self) -> None:
        gain = ComplexGain(0.1)
        for phi in np.linspace(0, 2 * math.pi, 8, endpoint=False):
            ket = phase_shift(opa_apply(PerturbativeKet.vacuum(), gain, 0.0), phi, 0.0)
            for r in (0.1, 0.5, 0.9):
                a = opa_apply(beamsplit_to_eve(ket, r, BeamsplitterConvention.SYMMETRIC), gain, 0.0)
                b = opa_apply(beamsplit_to_eve(ket, r, BeamsplitterConvention.REAL_ASYMMETRIC), gain, 0.0)
                assert expected_pair_count(a) == pytest.approx(expected_pair_count(b), abs=1e-15)
                da, db = outcome_distribution(a), outcome_distribution(b)
                for o in OutcomeDistribution.OUTCOMES:
                    assert da.probabilities[o] == pytest.approx(db.probabilities[o], abs=1e-12)


class TestOutcomes:

    def test_untampered_distribution(self) -> None:
        dist = outcome_distribution(alice_then_bob(0.1, 0.0))
        assert dist.pair == pytest.approx(0.04 / 1.04)
        assert dist.none == pytest.approx(1 / 1.04)
        assert dist.split == 0

    def test_steal_split_weight(self) -> None:
        ket = beamsplit_to_eve(opa_apply(PerturbativeKet.vacuum(), ComplexGain(0.1), 0.0), 0.3)
        dist = outcome_distribution(ket, Subsystem.EVE)
        assert dist.split * dist.z == pytest.approx(0.42 * 0.01)

    def test_vacuum_never_clicks(self) -> None:
        assert outcome_distribution(PerturbativeKet.vacuum()).none == 1.0

    def test_coarse_and_sampling(self) -> None:
        dist = OutcomeDistribution.from_weights({(0, 0): 1.0, (1, 1): 1.0})
        assert dist.coarse()[Detection.PAIR] == pytest.approx(0.5)
        draws = dist.sample(np.random.default_rng(0), 10_000)
        assert set(np.unique(draws)) <= {0, 2}
        assert isinstance(dist.sample(np.random.default_rng(0)), Detection)

    def test_idler_count_matches_signal_for_pairs(self) -> None:
        ket = alice_then_bob(0.1, 0.3)
        assert expected_pair_count(ket, Subsystem.BOB, Tone.IDLER) == pytest.approx(
            expected_pair_count(ket, Subsystem.BOB, Tone.SIGNAL))


class TestProjection:

    def test_eve_vacuum_projection_keeps_bob_terms(self) -> None:
        ket = beamsplit_to_eve(opa_apply(PerturbativeKet.vacuum(), ComplexGain(0.1), 0.0), 0.5)
        bob = project_eve_vacuum(ket)
        assert bob.is_subsystem_empty(Subsystem.EVE)
        assert bob.amplitude(BOB_PAIR) == pytest.approx(0.05j)

    def test_fidelity_of_identical_states(self) -> None:
        ket = alice_then_bob(0.1, 0.2)
        assert fidelity(ket, ket) == pytest.approx(1.0)
