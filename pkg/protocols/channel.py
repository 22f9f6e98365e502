"""
Single-channel SU(1,1) building blocks: Alice's source, line loss, Bob's readout.
"""

from core.quantum_core import (
    ComplexGain, PerturbativeKet, Subsystem, Tone, beamsplit_to_eve,
    expected_pair_count, opa_apply, phase_shift,
)


def alice_state(gain: ComplexGain, phi_a: float) -> PerturbativeKet:
    """Unseeded OPA pass followed by Alice's phase on the pair."""
    ket = opa_apply(PerturbativeKet.vacuum(), gain, 0.0, Subsystem.BOB)
    return phase_shift(ket, phi_a, 0.0, Subsystem.BOB)


def apply_line_loss(ket: PerturbativeKet, transmission: float) -> PerturbativeKet:
    """Loss on the way to Bob, modeled as a tap into the free auxiliary modes."""
    if transmission >= 1.0:
        return ket
    return beamsplit_to_eve(ket, 1.0 - transmission)


def bob_readout(ket: PerturbativeKet, gain: ComplexGain, phi_b: float) -> PerturbativeKet:
    """Bob's phase followed by his OPA pass (second half of the interferometer)."""
    ket = phase_shift(ket, phi_b, 0.0, Subsystem.BOB)
    return opa_apply(ket, gain, 0.0, Subsystem.BOB)


def bob_signal_count(ket: PerturbativeKet, gain: ComplexGain, phi_b: float) -> float:
    """Mean signal-mode photon number per coherence slot after Bob's OPA."""
    return expected_pair_count(bob_readout(ket, gain, phi_b), Subsystem.BOB, Tone.SIGNAL)
