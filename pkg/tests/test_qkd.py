"""
tests/test_qkd.py
Phase encoding, differential decoding and full QKD sessions.
"""

import math

import numpy as np
import pytest

from core.quantum_core import ComplexGain
from protocols.adversary import AttackModel, predicted_contrast
from protocols.encoding import Basis, alice_encode, bob_phase, wrap
from protocols.qkd import (
    DetectionRecord, Mode, Outcome, SessionConfig, differential_decode, run_session,
    sift_and_score, simulate_bit, simulate_session,
)
from spectral.channels import CrosstalkMode, CrosstalkModel
from utils.errors import PhysicsRangeError
from utils.stats import pearson, two_sample_chi2


class TestEncoding:

    def test_alice_phases(self) -> None:
        assert alice_encode(1, Basis.B1) == 0.0
        assert alice_encode(0, Basis.B1) == pytest.approx(math.pi)
        assert alice_encode(0, Basis.B2) == pytest.approx(math.pi / 2)
        assert alice_encode(1, Basis.B2) == pytest.approx(3 * math.pi / 2)

    def test_bob_phases(self) -> None:
        assert bob_phase(Basis.B1, 1) == 0.0
        assert bob_phase(Basis.B2, 1) == pytest.approx(math.pi / 2)
        assert bob_phase(Basis.B1, 2) == pytest.approx(math.pi)

    def test_window_mapping_swaps(self) -> None:
        assert bob_phase(Basis.B1, 1, window1_bit=0) == pytest.approx(math.pi)
        assert bob_phase(Basis.B1, 2, window1_bit=0) == 0.0

    def test_bases_mutually_unbiased(self) -> None:
        for bit in (0, 1):
            for a, b in ((Basis.B1, Basis.B2), (Basis.B2, Basis.B1)):
                assert abs(math.cos(alice_encode(bit, a) + bob_phase(b, 1))) < 1e-12

    def test_matched_phase_sum(self) -> None:
        for basis in Basis:
            assert wrap(alice_encode(1, basis) + bob_phase(basis, 1)) == pytest.approx(0.0, abs=1e-12)
            assert abs(wrap(alice_encode(0, basis) + bob_phase(basis, 1))) == pytest.approx(math.pi)


class TestSessionConfig:

    def test_odd_slots_rejected(self) -> None:
        with pytest.raises(PhysicsRangeError):
            SessionConfig(slots_per_window=101)

    def test_slot_probability_guard(self) -> None:
        with pytest.raises(PhysicsRangeError, match="exceeds 1"):
            SessionConfig(dark_count=0.99)

    @pytest.mark.parametrize("g", [0.45, 0.5])
    def test_gains_up_to_perturbative_limit_accepted(self, g: float) -> None:
        with pytest.warns(RuntimeWarning):
            cfg = SessionConfig(gains=ComplexGain(g), bits_per_channel=0, slots_per_window=2)
        assert cfg.max_slot_probability == pytest.approx(4 * g * g)

    def test_slot_probability_bound_uses_both_gains(self) -> None:
        cfg = SessionConfig(gains=ComplexGain(0.2), bob_gain_ratio=1.5, detector_efficiency=0.5,
                            dark_count=0.01, bits_per_channel=0)
        assert cfg.max_slot_probability == pytest.approx(0.5 * 0.5 ** 2 + 0.01)

    def test_bob_gain_ratio_checked_against_limit(self) -> None:
        with pytest.raises(PhysicsRangeError, match="Bob gain"):
            SessionConfig(gains=ComplexGain(0.3), bob_gain_ratio=2.0, bits_per_channel=0)

    def test_per_channel_values_expanded(self) -> None:
        cfg = SessionConfig(channels=3, transmission=0.5)
        assert cfg.transmission == (0.5, 0.5, 0.5)
        assert len(cfg.gains) == 3

    def test_per_channel_length_checked(self) -> None:
        with pytest.raises(PhysicsRangeError):
            SessionConfig(channels=3, transmission=(0.5, 0.5))


class TestSimulateBit:

    def test_zero_gain_never_clicks(self) -> None:
        cfg = SessionConfig(gains=ComplexGain(0.0))
        rng = np.random.default_rng(0)
        for _ in range(50):
            rec = simulate_bit(0, 1, Basis.B1, Basis.B1, AttackModel.none(), rng, cfg)
            assert (rec.counts_w1, rec.counts_w2) == (0, 0)

    def test_matched_bit_one_lands_in_window_one(self) -> None:
        cfg = SessionConfig(gains=ComplexGain(0.005))
        rng = np.random.default_rng(1)
        recs = [simulate_bit(0, 1, Basis.B1, Basis.B1, AttackModel.none(), rng, cfg) for _ in range(4000)]
        assert all(r.counts_w2 == 0 for r in recs)
        mean = np.mean([r.counts_w1 for r in recs])
        assert mean == pytest.approx(cfg.half_window * 4 * 0.005 ** 2, rel=0.1)
        assert recs[0].expected_N == pytest.approx(4 * 0.005 ** 2)

    def test_mismatched_windows_balanced(self) -> None:
        cfg = SessionConfig(gains=ComplexGain(0.05), slots_per_window=1000)
        rng = np.random.default_rng(2)
        recs = [simulate_bit(0, 0, Basis.B1, Basis.B2, AttackModel.none(), rng, cfg) for _ in range(3000)]
        expected = cfg.half_window * 2 * 0.05 ** 2
        assert np.mean([r.counts_w1 for r in recs]) == pytest.approx(expected, rel=0.05)
        assert np.mean([r.counts_w2 for r in recs]) == pytest.approx(expected, rel=0.05)


class TestDecode:

    def rec(self, c1: int, c2: int) -> DetectionRecord:
        return DetectionRecord(0, Basis.B1, Basis.B1, 1, c1, c2, 0.04)

    def test_outcomes(self) -> None:
        assert differential_decode(self.rec(3, 0)) is Outcome.BIT1
        assert differential_decode(self.rec(0, 2)) is Outcome.BIT0
        assert differential_decode(self.rec(0, 0)) is Outcome.ERASURE
        assert differential_decode(self.rec(1, 2)) is Outcome.INCONCLUSIVE

    def test_swapped_mapping(self) -> None:
        assert differential_decode(self.rec(3, 0), window1_bit=0) is Outcome.BIT0

    def test_negative_counts_rejected(self) -> None:
        with pytest.raises(PhysicsRangeError):
            self.rec(-1, 0)


class TestSiftAndScore:

    def test_hand_made_records(self) -> None:
        records = [
            DetectionRecord(0, Basis.B1, Basis.B1, 1, 3, 0, 0.04),
            DetectionRecord(0, Basis.B1, Basis.B1, 0, 0, 0, 0.0),
            DetectionRecord(0, Basis.B2, Basis.B2, 0, 1, 2, 0.0),
            DetectionRecord(0, Basis.B1, Basis.B2, 1, 1, 0, 0.02),
        ]
        report = sift_and_score(records, channels=1)
        assert list(report.sifted_key_a) == [1]
        assert list(report.sifted_key_b) == [1]
        assert report.qber == 0.0
        assert report.erasure_rate == pytest.approx(1 / 3)
        assert report.inconclusive_rate == pytest.approx(1 / 3)

    def test_empty_session_flags_qber(self) -> None:
        report = run_session(SessionConfig(bits_per_channel=0), AttackModel.none())
        assert not report.qber_defined
        assert math.isnan(report.qber)


class TestSampledSessions:

    def test_no_attack_decodes_perfectly(self, small_session) -> None:
        report = run_session(small_session, AttackModel.none())
        assert report.n_sifted > 0
        assert report.qber == 0.0
        assert np.array_equal(report.sifted_key_a, report.sifted_key_b)

    def test_swapped_window_mapping_decodes_perfectly(self) -> None:
        cfg = SessionConfig(channels=1, slots_per_window=100, bits_per_channel=2000, window1_bit=0)
        assert run_session(cfg, AttackModel.none()).qber == 0.0

    def test_deterministic(self, small_session) -> None:
        a = run_session(small_session, AttackModel.steal(0.3))
        b = run_session(small_session, AttackModel.steal(0.3))
        assert np.array_equal(a.sifted_key_a, b.sifted_key_a)
        assert np.array_equal(a.sifted_key_b, b.sifted_key_b)
        assert a.to_dict() == b.to_dict()

    def test_different_seed_differs(self, small_session) -> None:
        other = SessionConfig(channels=2, slots_per_window=100, bits_per_channel=2000, master_seed=8)
        a = simulate_session(small_session, AttackModel.none())
        b = simulate_session(other, AttackModel.none())
        assert not np.array_equal(a.alice_bit, b.alice_bit)

    def test_basis_secrecy(self) -> None:
        cfg = SessionConfig(channels=1, slots_per_window=100, bits_per_channel=200_000, master_seed=11)
        batch = simulate_session(cfg, AttackModel.none())
        mismatched = batch.alice_basis != batch.bob_basis
        c0 = batch.counts_w1[mismatched & (batch.alice_bit == 0)]
        c1 = batch.counts_w1[mismatched & (batch.alice_bit == 1)]
        assert c0.size > 40_000 and c1.size > 40_000
        assert two_sample_chi2(c0, c1) > 1e-3

    def test_twenty_three_channel_key_independent(self) -> None:
        cfg = SessionConfig(channels=23, slots_per_window=100, bits_per_channel=20_000, master_seed=13)
        batch = simulate_session(cfg, AttackModel.none())
        report = sift_and_score(batch, channels=23)
        matched = batch.alice_basis == batch.bob_basis
        decodable = (batch.counts_w1 > 0) != (batch.counts_w2 > 0)
        assert abs(matched.mean() - 0.5) < 4 * 0.5 / math.sqrt(len(batch))
        assert report.n_sifted == int((matched & decodable).sum())
        bob_bits = (batch.counts_w1 > 0).astype(np.int8)
        for c in range(22):
            here, there = batch.channel == c, batch.channel == c + 1
            n = int(here.sum())
            assert abs(pearson(batch.alice_bit[here], batch.alice_bit[there])) < 4 / math.sqrt(n)
            both = decodable[here] & decodable[there]
            r = pearson(bob_bits[here][both], bob_bits[there][both])
            assert abs(r) < 4 / math.sqrt(int(both.sum()))

    def test_steal_contrast(self) -> None:
        cfg = SessionConfig(channels=1, slots_per_window=100, bits_per_channel=40_000, master_seed=5)
        report = run_session(cfg, AttackModel.steal(0.5))
        v, sem = report.contrast[0], report.contrast_sem[0]
        assert abs(v - 2 * 0.5 / 1.5) < max(4 * sem, 0.01)

    def test_intercept_resend_error_rate(self) -> None:
        cfg = SessionConfig(channels=1, gains=ComplexGain(0.0158), slots_per_window=100,
                            bits_per_channel=1_200_000, master_seed=3)
        report = run_session(cfg, AttackModel.intercept_resend())
        assert report.n_sifted > 20_000
        assert report.qber == pytest.approx(0.25, abs=0.01)

    def test_crosstalk_raises_errors(self) -> None:
        model = CrosstalkModel.tridiagonal(3, 0.1, 0.1)
        cfg = SessionConfig(channels=3, slots_per_window=100, bits_per_channel=5000, crosstalk=model)
        assert run_session(cfg, AttackModel.none()).qber > 0.0

    def test_phase_blur_crosstalk_runs(self) -> None:
        model = CrosstalkModel.tridiagonal(3, 0.1, 0.1, CrosstalkMode.PHASE_BLUR)
        cfg = SessionConfig(channels=3, slots_per_window=100, bits_per_channel=5000, crosstalk=model)
        assert run_session(cfg, AttackModel.none()).qber > 0.0


class TestExpectationSessions:

    def test_ideal_channels_full_contrast(self) -> None:
        cfg = SessionConfig(channels=23, bits_per_channel=0)
        report = run_session(cfg, AttackModel.none(), Mode.EXPECTATION)
        assert all(v == pytest.approx(1.0, abs=1e-12) for v in report.contrast)
        assert report.qber == pytest.approx(0.0, abs=1e-12)

    def test_lossy_line_contrast(self) -> None:
        cfg = SessionConfig(channels=23, transmission=0.56, bits_per_channel=0)
        report = run_session(cfg, AttackModel.none(), Mode.EXPECTATION)
        assert all(v == pytest.approx(2 * 0.56 / 1.56, abs=1e-9) for v in report.contrast)

    @pytest.mark.parametrize("attack", [
        AttackModel.none(), AttackModel.steal(0.5), AttackModel.intercept_resend(),
        AttackModel.steal_resend(0.3),
    ])
    def test_matches_predictor(self, attack: AttackModel) -> None:
        cfg = SessionConfig(channels=1, bits_per_channel=0)
        report = run_session(cfg, attack, Mode.EXPECTATION)
        assert abs(report.contrast[0] - predicted_contrast(attack, 0.1)) < 1e-9

    def test_unequal_gains(self) -> None:
        cfg = SessionConfig(channels=1, bob_gain_ratio=2.0, bits_per_channel=0)
        report = run_session(cfg, AttackModel.steal(0.5), Mode.EXPECTATION)
        assert report.contrast[0] == pytest.approx(
            predicted_contrast(AttackModel.steal(0.5), 0.1, bob_gain_ratio=2.0), abs=1e-9)

    def test_low_flux_intercept_resend_rate(self) -> None:
        cfg = SessionConfig(channels=1, gains=ComplexGain(0.0158), slots_per_window=100, bits_per_channel=0)
        report = run_session(cfg, AttackModel.intercept_resend(), Mode.EXPECTATION)
        assert report.qber == pytest.approx(0.25, abs=0.01)

    @pytest.mark.parametrize("mode", list(CrosstalkMode))
    def test_qber_monotone_in_leak(self, mode: CrosstalkMode) -> None:
        previous = -1.0
        for leak in (0.0, 0.01, 0.05, 0.1):
            model = CrosstalkModel.tridiagonal(3, leak, leak, mode)
            cfg = SessionConfig(channels=3, slots_per_window=100, bits_per_channel=0, crosstalk=model)
            report = run_session(cfg, AttackModel.none(), Mode.EXPECTATION)
            assert report.channel_qber[1] >= previous
            previous = report.channel_qber[1]
        assert previous > 0
