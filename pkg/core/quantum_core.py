"""
Perturbative biphoton state algebra.

A channel is one signal-idler pair seen by two parties, Bob (the line towards
the receiver) and Eve (auxiliary modes fed through a tap). States are kept to
first order in the parametric gain: the vacuum amplitude is fixed at 1 and
every other amplitude is of order g. Anything of order g^2 is dropped when it
would be created, so a state never has more than the 16 occupation tuples
(n_sB, n_iB, n_sE, n_iE) with n in {0, 1}.

All values are immutable; every operation returns a new ket.
"""

import cmath
import math
import warnings
from dataclasses import dataclass, field
from enum import Enum
from types import MappingProxyType
from typing import Dict, Iterator, Mapping, Optional, Tuple

import numpy as np

from config.constants import GAIN_MAX, GAIN_WARN_THRESHOLD, TWO_PI
from utils.errors import PhysicsRangeError
from utils.logger import dbg

Occupation = Tuple[int, int, int, int]
VACUUM: Occupation = (0, 0, 0, 0)


class Subsystem(Enum):
    BOB = "Bob"
    EVE = "Eve"


class Tone(Enum):
    SIGNAL = "Signal"
    IDLER = "Idler"


class BeamsplitterConvention(Enum):
    SYMMETRIC = "symmetric"            # a -> t a + i r e
    REAL_ASYMMETRIC = "real_asymmetric"  # a -> t a + r e


class Detection(Enum):
    """Coarse outcome of one subsystem's photon-counting measurement."""

    NONE = "none"
    SPLIT = "split"
    PAIR = "pair"


@dataclass(frozen=True)
class ModeId:
    subsystem: Subsystem
    tone: Tone

    @property
    def index(self) -> int:
        base = 0 if self.subsystem is Subsystem.BOB else 2
        return base + (0 if self.tone is Tone.SIGNAL else 1)


ALL_MODES = tuple(ModeId(s, t) for s in Subsystem for t in Tone)


def _slots(subsystem: Subsystem) -> Tuple[int, int]:
    return (0, 1) if subsystem is Subsystem.BOB else (2, 3)


@dataclass(frozen=True)
class ComplexGain:
    """Parametric gain g = |g| e^{i arg g} of one OPA pass for one channel."""

    magnitude: float
    phase: float = 0.0

    def __post_init__(self):
        if not math.isfinite(self.magnitude) or self.magnitude < 0:
            raise PhysicsRangeError(f"gain magnitude must be non-negative, got {self.magnitude}")
        if self.magnitude > GAIN_MAX:
            raise PhysicsRangeError(
                f"gain magnitude {self.magnitude} outside the perturbative regime (max {GAIN_MAX})")
        if self.magnitude > GAIN_WARN_THRESHOLD:
            dbg(f"Guadagno {self.magnitude} oltre la soglia perturbativa {GAIN_WARN_THRESHOLD}")
            warnings.warn(f"gain {self.magnitude} above {GAIN_WARN_THRESHOLD}: "
                          "first-order truncation is loose", RuntimeWarning, stacklevel=3)
        object.__setattr__(self, "phase", self.phase % TWO_PI)

    @classmethod
    def from_complex(cls, value: complex) -> "ComplexGain":
        return cls(abs(value), cmath.phase(value))

    @property
    def value(self) -> complex:
        return self.magnitude * cmath.exp(1j * self.phase)

    def scaled(self, factor: float) -> "ComplexGain":
        return ComplexGain(self.magnitude * factor, self.phase)


@dataclass(frozen=True)
class PerturbativeKet:
    """First-order biphoton state over the Bob/Eve signal-idler occupations."""

    amplitudes: Mapping[Occupation, complex] = field(
        default_factory=lambda: MappingProxyType({VACUUM: 1.0 + 0j}))

    def __post_init__(self):
        amps = dict(self.amplitudes)
        for occ in amps:
            if len(occ) != 4 or any(n not in (0, 1) for n in occ):
                raise PhysicsRangeError(f"occupation {occ} outside {{0,1}}^4")
        if amps.get(VACUUM) != 1:
            raise PhysicsRangeError("vacuum amplitude must be exactly 1")
        object.__setattr__(self, "amplitudes", MappingProxyType(amps))

    @classmethod
    def vacuum(cls) -> "PerturbativeKet":
        return cls()

    @staticmethod
    def order(occ: Occupation) -> int:
        return 0 if occ == VACUUM else 1

    def amplitude(self, occ: Occupation) -> complex:
        return self.amplitudes.get(occ, 0j)

    def items(self) -> Iterator[Tuple[Occupation, complex]]:
        return iter(self.amplitudes.items())

    def norm_squared(self) -> float:
        return float(sum(abs(a) ** 2 for a in self.amplitudes.values()))

    def is_subsystem_empty(self, subsystem: Subsystem) -> bool:
        i, j = _slots(subsystem)
        return all(occ[i] == 0 and occ[j] == 0 for occ, a in self.items() if a != 0)

    def _replace(self, amps: Dict[Occupation, complex]) -> "PerturbativeKet":
        amps = {occ: a for occ, a in amps.items() if a != 0 or occ == VACUUM}
        return PerturbativeKet(amps)


def opa_apply(ket: PerturbativeKet, gain: ComplexGain, pump_phase: float,
              subsystem: Subsystem = Subsystem.BOB) -> PerturbativeKet:
    """
    Pass the chosen subsystem through an OPA, to first order in the gain.

    The propagator 1 + i g a_s^dag a_i^dag only acts on the order-0 (vacuum)
    term; acting on an order-1 term gives order 2 and is pruned.

    Args:
        ket: Input state
        gain: Complex gain of the pass
        pump_phase: Pump phase added to arg g
        subsystem: Which pair of modes the crystal sees

    Returns:
        New ket with the pair amplitude raised by i|g|e^{i(arg g + pump_phase)}
    """
    i, j = _slots(subsystem)
    coef = 1j * gain.magnitude * cmath.exp(1j * (gain.phase + pump_phase))
    amps = dict(ket.amplitudes)
    for occ, amp in ket.items():
        if PerturbativeKet.order(occ) != 0:
            continue
        if occ[i] or occ[j]:
            raise PhysicsRangeError(f"occupation overflow raising {occ} on {subsystem.value}")
        target = list(occ)
        target[i] += 1
        target[j] += 1
        target = tuple(target)
        amps[target] = amps.get(target, 0j) + coef * amp
    return ket._replace(amps)


def phase_shift(ket: PerturbativeKet, phi_signal: float, phi_idler: float,
                subsystem: Subsystem = Subsystem.BOB) -> PerturbativeKet:
    """Multiply each amplitude by e^{i(n_s phi_signal + n_i phi_idler)} on one subsystem."""
    i, j = _slots(subsystem)
    amps = {occ: amp * cmath.exp(1j * (occ[i] * phi_signal + occ[j] * phi_idler))
            for occ, amp in ket.items()}
    return ket._replace(amps)


def beamsplit_to_eve(ket: PerturbativeKet, reflectance: float,
                     convention: BeamsplitterConvention = BeamsplitterConvention.REAL_ASYMMETRIC
                     ) -> PerturbativeKet:
    """
    Tap the Bob line with a beamsplitter whose other input is Eve's vacuum.

    With T = t^2 = 1 - R, a Bob pair becomes t^2 (Bob pair) + split terms
    with weight r t each + an Eve pair with coefficient -r^2 (symmetric) or
    +r^2 (real asymmetric).

    Raises:
        PhysicsRangeError: reflectance outside [0, 1] or Eve modes occupied
    """
    if not 0.0 <= reflectance <= 1.0:
        raise PhysicsRangeError(f"reflectance out of range: {reflectance}")
    if not ket.is_subsystem_empty(Subsystem.EVE):
        raise PhysicsRangeError("beamsplitter requires Eve's modes in vacuum")
    if reflectance == 0.0:
        return ket

    r = math.sqrt(reflectance)
    t = math.sqrt(1.0 - reflectance)
    # creation operator map: a^dag -> t a^dag + rho e^dag
    rho = 1j * r if convention is BeamsplitterConvention.SYMMETRIC else r + 0j

    amps: Dict[Occupation, complex] = {}

    def add(occ: Occupation, value: complex) -> None:
        amps[occ] = amps.get(occ, 0j) + value

    for (ns, ni, _, _), amp in ket.items():
        # each photon goes either to Bob (factor t) or to Eve (factor rho)
        for s_to_eve in range(ns + 1):
            for i_to_eve in range(ni + 1):
                factor = ((rho if s_to_eve else t) if ns else 1.0) * \
                         ((rho if i_to_eve else t) if ni else 1.0)
                occ = (ns - s_to_eve, ni - i_to_eve, s_to_eve, i_to_eve)
                add(occ, factor * amp)
    return ket._replace(amps)


def expected_pair_count(ket: PerturbativeKet, subsystem: Subsystem = Subsystem.BOB,
                        mode: Tone = Tone.SIGNAL) -> float:
    """Mean photon number in one mode, unnormalized (vacuum amplitude 1)."""
    idx = ModeId(subsystem, mode).index
    return float(sum(occ[idx] * abs(amp) ** 2 for occ, amp in ket.items()))


@dataclass(frozen=True)
class OutcomeDistribution:
    """Photon-counting outcome (n_signal, n_idler) probabilities of one subsystem."""

    probabilities: Mapping[Tuple[int, int], float]
    z: float

    OUTCOMES = ((0, 0), (1, 0), (0, 1), (1, 1))

    def __post_init__(self):
        probs = {o: float(self.probabilities.get(o, 0.0)) for o in self.OUTCOMES}
        if any(p < 0 for p in probs.values()):
            raise PhysicsRangeError("negative outcome probability")
        if abs(sum(probs.values()) - 1.0) > 1e-12:
            raise PhysicsRangeError("outcome probabilities do not sum to 1")
        if self.z <= 0:
            raise PhysicsRangeError("normalization constant must be positive")
        object.__setattr__(self, "probabilities", MappingProxyType(probs))

    @classmethod
    def from_weights(cls, weights: Mapping[Tuple[int, int], float]) -> "OutcomeDistribution":
        z = float(sum(weights.values()))
        return cls({o: w / z for o, w in weights.items()}, z)

    @property
    def pair(self) -> float:
        return self.probabilities[(1, 1)]

    @property
    def split(self) -> float:
        return self.probabilities[(1, 0)] + self.probabilities[(0, 1)]

    @property
    def none(self) -> float:
        return self.probabilities[(0, 0)]

    def coarse(self) -> Dict[Detection, float]:
        return {Detection.NONE: self.none, Detection.SPLIT: self.split, Detection.PAIR: self.pair}

    def sample(self, rng: np.random.Generator, size: Optional[int] = None):
        """Draw coarse outcomes; returns Detection (scalar) or an index array (0 none, 1 split, 2 pair)."""
        p = np.array([self.none, self.split, self.pair])
        p = p / p.sum()
        if size is None:
            return list(Detection)[int(rng.choice(3, p=p))]
        return rng.choice(3, size=size, p=p)


def outcome_distribution(ket: PerturbativeKet,
                         subsystem: Subsystem = Subsystem.BOB) -> OutcomeDistribution:
    """Group |amplitude|^2 by the subsystem's (n_signal, n_idler) and normalize."""
    i, j = _slots(subsystem)
    weights = {o: 0.0 for o in OutcomeDistribution.OUTCOMES}
    for occ, amp in ket.items():
        weights[(occ[i], occ[j])] += abs(amp) ** 2
    return OutcomeDistribution.from_weights(weights)


def joint_probabilities(ket: PerturbativeKet) -> Dict[Occupation, float]:
    """Normalized probabilities over the full Bob x Eve occupation basis."""
    z = ket.norm_squared()
    return {occ: abs(a) ** 2 / z for occ, a in ket.items()}


def project_eve_vacuum(ket: PerturbativeKet) -> PerturbativeKet:
    """Bob's (unnormalized) conditional state after Eve registers no photon."""
    amps = {occ: a for occ, a in ket.items() if occ[2] == 0 and occ[3] == 0}
    return PerturbativeKet(amps)


def fidelity(a: PerturbativeKet, b: PerturbativeKet) -> float:
    """|<a|b>|^2 of the normalized states."""
    overlap = sum(amp.conjugate() * b.amplitude(occ) for occ, amp in a.items())
    return float(abs(overlap) ** 2 / (a.norm_squared() * b.norm_squared()))
