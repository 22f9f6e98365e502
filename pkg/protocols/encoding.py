"""
Bit/basis to phase maps shared by Alice, Bob and Eve.

Basis 1 carries bit 1 at phase 0 and bit 0 at pi. Basis 2 carries bit 1 at
3pi/2 and bit 0 at pi/2, so with Bob's basis-2 phase pi/2 the matched phase-sum
is 0 for bit 1 and pi for bit 0, exactly as in basis 1.
"""

import math
from enum import IntEnum

from config.constants import TWO_PI


class Basis(IntEnum):
    B1 = 0
    B2 = 1


_ALICE_PHASE = {
    (Basis.B1, 1): 0.0,
    (Basis.B1, 0): math.pi,
    (Basis.B2, 1): 3 * math.pi / 2,
    (Basis.B2, 0): math.pi / 2,
}

_BASIS_PHASE = {Basis.B1: 0.0, Basis.B2: math.pi / 2}


def alice_encode(bit: int, basis: Basis) -> float:
    """Phase Alice writes on the channel for one bit."""
    if bit not in (0, 1):
        raise ValueError(f"bit must be 0 or 1, got {bit}")
    return _ALICE_PHASE[(Basis(basis), bit)]


def basis_phase(basis: Basis) -> float:
    """Measurement phase of a basis, used by Bob and by Eve."""
    return _BASIS_PHASE[Basis(basis)]


def bob_phase(basis: Basis, half_window: int, window1_bit: int = 1) -> float:
    """
    Bob's phase in one half of the differential window.

    Window 2 is flipped by pi. With window1_bit = 0 the roles of the two
    halves are exchanged, so window 1 becomes the flipped one.
    """
    if half_window not in (1, 2):
        raise ValueError(f"half_window must be 1 or 2, got {half_window}")
    flipped = (half_window == 2) != (window1_bit == 0)
    return (basis_phase(basis) + (math.pi if flipped else 0.0)) % TWO_PI


def wrap(phase: float) -> float:
    """Phase folded into (-pi, pi]."""
    p = math.fmod(phase, TWO_PI)
    if p <= -math.pi:
        p += TWO_PI
    elif p > math.pi:
        p -= TWO_PI
    return p
