"""
tests/test_fock_oracle.py
Exact truncated-Fock propagator and its agreement with the first-order algebra.
"""

import math

import numpy as np
import pytest

from core.fock_oracle import ExactKet, exact_phase_shift, exact_propagator_oracle, oracle_opa
from core.quantum_core import ComplexGain, PerturbativeKet, expected_pair_count, opa_apply, phase_shift
from utils.errors import OracleInvalidError


def perturbative(g: float, phi: float) -> float:
    gain = ComplexGain(g)
    ket = phase_shift(opa_apply(PerturbativeKet.vacuum(), gain, 0.0), phi, 0.0)
    return expected_pair_count(opa_apply(ket, gain, 0.0))


class TestExactKet:

    def test_vacuum_is_normalised(self) -> None:
        ket = ExactKet.vacuum()
        assert ket.population(0, 0) == 1.0
        assert ket.leakage() == 0.0

    def test_unnormalised_state_rejected(self) -> None:
        psi = np.zeros((7, 7), dtype=complex)
        psi[0, 0] = 2.0
        with pytest.raises(OracleInvalidError):
            ExactKet(psi)

    def test_amplitudes_read_only(self) -> None:
        with pytest.raises(ValueError):
            ExactKet.vacuum().psi[0, 0] = 0.5


class TestPropagator:

    def test_zero_gain_is_identity(self) -> None:
        out = exact_propagator_oracle(ExactKet.vacuum(), 0.0, 0.3)
        np.testing.assert_allclose(out.psi, ExactKet.vacuum().psi, atol=1e-15)

    def test_vacuum_mean_photons(self) -> None:
        out = exact_propagator_oracle(ExactKet.vacuum(), 0.1, 0.0)
        assert out.mean_photons(0) == pytest.approx(math.sinh(0.1) ** 2, rel=1e-10)
        assert out.mean_photons(0) == pytest.approx(out.mean_photons(1), rel=1e-12)
        assert out.mean_photons(0) == pytest.approx(0.01, rel=0.01)

    def test_norm_preserved(self) -> None:
        out = exact_propagator_oracle(ExactKet.vacuum(), 0.1, 1.1)
        assert np.linalg.norm(out.psi) == pytest.approx(1.0, abs=1e-10)

    def test_opposite_phases_undo_squeezing(self) -> None:
        once = exact_propagator_oracle(ExactKet.vacuum(), 0.1, 0.0)
        back = exact_propagator_oracle(once, 0.1, math.pi)
        assert back.population(0, 0) == pytest.approx(1.0, abs=1e-10)

    def test_excess_leakage_rejected(self) -> None:
        with pytest.raises(OracleInvalidError):
            exact_propagator_oracle(ExactKet.vacuum(), 1.0, 0.0)


class TestAgreement:

    @pytest.mark.parametrize("g", [0.01, 0.05, 0.1])
    def test_constructive_within_two_g_squared(self, g: float) -> None:
        exact = oracle_opa(oracle_opa(ExactKet.vacuum(cutoff=12), g, 0.0, 0.0), g, 0.0, 0.0).mean_photons(0)
        assert exact == pytest.approx(math.sinh(2 * g) ** 2, rel=1e-9)
        assert abs(exact - perturbative(g, 0.0)) / exact <= 2 * g * g

    def test_default_cutoff_error_bounded_by_truncated_tail(self) -> None:
        g = 0.1
        exact = oracle_opa(oracle_opa(ExactKet.vacuum(), g, 0.0, 0.0), g, 0.0, 0.0).mean_photons(0)
        tail = math.tanh(2 * g) ** (2 * ExactKet.vacuum().cutoff)
        assert exact == pytest.approx(math.sinh(2 * g) ** 2, rel=10 * tail)

    def test_gain_005_pair_count(self) -> None:
        assert perturbative(0.05, 0.0) == pytest.approx(0.01)
        assert math.sinh(0.1) ** 2 == pytest.approx(0.010033, abs=1e-6)

    def test_destructive_matches_vacuum(self) -> None:
        g = 0.1
        alice = exact_phase_shift(oracle_opa(ExactKet.vacuum(), g, 0.0, 0.0), math.pi, 0.0)
        bob = oracle_opa(alice, g, 0.0, 0.0)
        assert bob.mean_photons(0) < 1e-10
        assert perturbative(g, math.pi) < 1e-15

    def test_gain_phase_follows_pump_convention(self) -> None:
        g = 0.05
        a = oracle_opa(ExactKet.vacuum(), g, 0.4, 0.0)
        b = oracle_opa(ExactKet.vacuum(), g, 0.0, 0.4)
        np.testing.assert_allclose(a.psi, b.psi, atol=1e-14)
        pair = a.psi[1, 1] / a.psi[0, 0]
        assert pair / abs(pair) == pytest.approx(1j * np.exp(0.4j), abs=1e-9)
