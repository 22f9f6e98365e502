"""
Eavesdropper models and their closed-form predictors.

Eve either intercepts the whole line and resends a fresh state, taps a
fraction R of it with a beamsplitter (steal), or taps, measures and then
replenishes Bob's line with her best concealing action (steal-resend).

Every attack is also available as an exact enumeration of "branches": the
distinct states Bob can receive together with their probabilities. The QKD
session samples these branches; the predictors average over them.
"""

import math
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from config.constants import BASELINE_TRANSMISSION, EXTRA_LOSS, TWO_PI
from core.quantum_core import (
    BeamsplitterConvention, ComplexGain, Detection, OutcomeDistribution,
    PerturbativeKet, Subsystem, beamsplit_to_eve, expected_pair_count,
    opa_apply, outcome_distribution, phase_shift, project_eve_vacuum,
)
from protocols.channel import alice_state, apply_line_loss, bob_signal_count
from protocols.encoding import Basis, alice_encode, basis_phase, bob_phase, wrap
from utils.errors import PhysicsRangeError
from utils.logger import dbg

EVE_BASIS_PHASES = (basis_phase(Basis.B1), basis_phase(Basis.B2))
_PHASE_TOL = 1e-9


class AttackKind(Enum):
    NONE = "none"
    INTERCEPT_RESEND = "intercept-resend"
    STEAL = "steal"
    STEAL_RESEND = "steal-resend"


class OutcomeWeights(Enum):
    """
    No-click weight of Eve's steal-resend outcome table.

    TABULATED uses the printed |g|^2 (T - 1/g)^2; DERIVED keeps 1 + |g|^2 T^2
    from the state algebra. Pair and split rows are the same in both.
    """

    TABULATED = "tabulated"
    DERIVED = "derived"


@dataclass(frozen=True)
class AttackModel:
    """
    Attack variant and its parameters.

    Eve's basis is drawn uniformly per bit for the measuring attacks.
    `idealized` selects the one-photon-per-bit reading for intercept-resend
    (Eve's click probability follows her interference exactly); otherwise she
    reads a single coherence slot.
    """

    kind: AttackKind = AttackKind.NONE
    reflectance: Optional[float] = None
    idealized: bool = True
    convention: BeamsplitterConvention = BeamsplitterConvention.REAL_ASYMMETRIC
    weights: OutcomeWeights = OutcomeWeights.TABULATED

    def __post_init__(self):
        if self.kind in (AttackKind.STEAL, AttackKind.STEAL_RESEND):
            if self.reflectance is None:
                raise PhysicsRangeError(f"{self.kind.value} attack requires a reflectance")
            if not 0.0 <= self.reflectance <= 1.0:
                raise PhysicsRangeError(f"reflectance out of range: {self.reflectance}")
        elif self.reflectance is not None:
            raise PhysicsRangeError(f"{self.kind.value} attack carries no reflectance")

    @classmethod
    def none(cls) -> "AttackModel":
        return cls()

    @classmethod
    def intercept_resend(cls, idealized: bool = True) -> "AttackModel":
        return cls(AttackKind.INTERCEPT_RESEND, idealized=idealized)

    @classmethod
    def steal(cls, reflectance: float) -> "AttackModel":
        return cls(AttackKind.STEAL, reflectance)

    @classmethod
    def steal_resend(cls, reflectance: float, **kw) -> "AttackModel":
        return cls(AttackKind.STEAL_RESEND, reflectance, **kw)

    @property
    def transmission(self) -> float:
        return 1.0 - (self.reflectance or 0.0)

    @property
    def label(self) -> str:
        if self.reflectance is None:
            return self.kind.value
        return f"{self.kind.value}(R={self.reflectance:g})"


class EveActionKind(Enum):
    GENERATE_PAIR = "generate-pair"
    REPLACE_STATE = "replace-state"
    MANIPULATE = "manipulate"


@dataclass(frozen=True)
class EveAction:
    kind: EveActionKind
    phi_guess: float
    phi_shift: float = 0.0
    alpha: float = 0.0


@dataclass(frozen=True, eq=False)
class AttackBranch:
    """One state Bob may receive, with its probability."""

    weight: float
    ket: PerturbativeKet
    label: str
    action: Optional[EveAction] = None


# Intercept-resend

def _magnitude(gain: Union[ComplexGain, float]) -> float:
    return gain.magnitude if isinstance(gain, ComplexGain) else float(gain)


def intercept_guess_probs(ket: PerturbativeKet, phi_e: float, gain: ComplexGain,
                          idealized: bool = True) -> Dict[float, float]:
    """
    Probabilities of Eve's phase guesses (0 or pi) after her own SU(1,1) stage.

    Idealized: she clicks with probability N_E / 4|g|^2, i.e. always on
    constructive and never on destructive interference. Otherwise a single
    coherence slot is read: pair -> 0, nothing -> pi, split -> coin flip.
    """
    eve_ket = opa_apply(phase_shift(ket, phi_e, 0.0, Subsystem.BOB), gain, 0.0, Subsystem.BOB)
    if idealized:
        if gain.magnitude == 0:
            return {0.0: 0.5, math.pi: 0.5}
        p0 = expected_pair_count(eve_ket) / (4 * gain.magnitude ** 2)
        p0 = min(max(p0, 0.0), 1.0)
        return {0.0: p0, math.pi: 1.0 - p0}
    dist = outcome_distribution(eve_ket, Subsystem.BOB)
    return {0.0: dist.pair + dist.split / 2, math.pi: dist.none + dist.split / 2}


def intercept_resend(ket: PerturbativeKet, phi_e: float, gain: ComplexGain,
                     rng: np.random.Generator, idealized: bool = True
                     ) -> Tuple[PerturbativeKet, int]:
    """
    Read the line in basis phase phi_e and resend an Alice-like state.

    Returns:
        (regenerated ket, Eve's bit guess)
    """
    probs = intercept_guess_probs(ket, phi_e, gain, idealized)
    guess = 0.0 if rng.random() < probs[0.0] else math.pi
    regenerated = alice_state(gain, (guess - phi_e) % TWO_PI)
    return regenerated, 1 if guess == 0.0 else 0


# Steal and steal-resend

def steal_transform(ket: PerturbativeKet, reflectance: float,
                    convention: BeamsplitterConvention = BeamsplitterConvention.REAL_ASYMMETRIC
                    ) -> PerturbativeKet:
    return beamsplit_to_eve(ket, reflectance, convention)


def eve_measurement_ket(ket: PerturbativeKet, phi_e: float, reflectance: float,
                        gain: ComplexGain,
                        convention: BeamsplitterConvention = BeamsplitterConvention.REAL_ASYMMETRIC
                        ) -> PerturbativeKet:
    """
    Joint state after Eve's basis phase, her tap and her OPA on the stolen modes.

    The basis phase is applied to the line before the tap, so the part left
    for Bob carries e^{i phi_E}; eve_replenish undoes it.
    """
    line = phase_shift(ket, phi_e, 0.0, Subsystem.BOB)
    joint = steal_transform(line, reflectance, convention)
    return opa_apply(joint, gain, 0.0, Subsystem.EVE)


_TABULATED_PAIR = {
    0.0: lambda r: (r + 1) ** 2,
    math.pi / 2: lambda r: abs(r - 1j) ** 2,
    math.pi: lambda r: (r - 1) ** 2,
    -math.pi / 2: lambda r: abs(r + 1j) ** 2,
}


def _tabulated_phase(phi_ae: float) -> float:
    w = wrap(phi_ae)
    for key in _TABULATED_PAIR:
        if abs(wrap(w - key)) < _PHASE_TOL:
            return key
    raise PhysicsRangeError(f"phi_AE = {phi_ae} is not one of 0, +-pi/2, pi")


def eve_outcome_probs(phi_ae: float, reflectance: float, gain: Union[ComplexGain, float],
                      weights: OutcomeWeights = OutcomeWeights.DERIVED) -> OutcomeDistribution:
    """
    Closed-form distribution of Eve's counts at the tabulated phases.

    Pair weight |g|^2 |e^{-i phi_AE} + R|^2, split weight 2RT|g|^2 and vacuum
    weight 1 + |g|^2 T^2 (the last from Bob's pair term left in Eve's vacuum),
    or the printed vacuum weight when `weights` is TABULATED.
    """
    key = _tabulated_phase(phi_ae)
    if not 0.0 <= reflectance <= 1.0:
        raise PhysicsRangeError(f"reflectance out of range: {reflectance}")
    g2 = _magnitude(gain) ** 2
    t = 1.0 - reflectance
    single = g2 * reflectance * t
    if OutcomeWeights(weights) is OutcomeWeights.TABULATED:
        vacuum = tabulated_vacuum_weight(reflectance, gain)
    else:
        vacuum = 1.0 + g2 * t ** 2
    return OutcomeDistribution.from_weights({
        (1, 1): g2 * _TABULATED_PAIR[key](reflectance),
        (1, 0): single,
        (0, 1): single,
        (0, 0): vacuum,
    })


def tabulated_vacuum_weight(reflectance: float, gain: Union[ComplexGain, float]) -> float:
    """The printed no-click weight (T - 1/g)^2, on the same |g|^2 scale as the other rows."""
    g = _magnitude(gain)
    return (g * (1.0 - reflectance) - 1.0) ** 2


def eve_outcomes(joint: PerturbativeKet, reflectance: float, gain: Union[ComplexGain, float],
                 weights: OutcomeWeights = OutcomeWeights.DERIVED) -> OutcomeDistribution:
    """Eve's outcome distribution read off the joint state, any phase and convention."""
    dist = outcome_distribution(joint, Subsystem.EVE)
    if OutcomeWeights(weights) is OutcomeWeights.DERIVED:
        return dist
    raw = {o: p * dist.z for o, p in dist.probabilities.items()}
    raw[(0, 0)] = tabulated_vacuum_weight(reflectance, gain)
    return OutcomeDistribution.from_weights(raw)


def eve_guess_probs(outcome: Detection) -> Dict[float, float]:
    if outcome is Detection.PAIR:
        return {0.0: 1.0}
    if outcome is Detection.NONE:
        return {math.pi: 1.0}
    return {0.0: 0.5, math.pi: 0.5}


def eve_guess(outcome: Detection, rng: Optional[np.random.Generator] = None) -> float:
    """Eve's guess of phi_AE: pair -> 0, nothing -> pi, split -> random."""
    probs = eve_guess_probs(outcome)
    if len(probs) == 1:
        return next(iter(probs))
    if rng is None:
        raise ValueError("a random generator is needed to guess after a split outcome")
    return 0.0 if rng.random() < 0.5 else math.pi


def eve_replenish(outcome: Detection, guess: float, remaining: PerturbativeKet,
                  transmission: float, gain: ComplexGain, phi_e: float
                  ) -> Tuple[PerturbativeKet, EveAction]:
    """
    Eve's concealing action towards Bob after her measurement.

    Args:
        outcome: What Eve registered
        guess: Her guess of phi_AE
        remaining: Joint state after her OPA (as returned by eve_measurement_ket)
        transmission: T = t^2 of her tap
        gain: Alice's gain
        phi_e: Eve's basis phase

    Returns:
        (Bob-only ket, action taken)
    """
    phi_guess = (guess - phi_e) % TWO_PI
    if outcome is Detection.PAIR:
        return alice_state(gain, phi_guess), EveAction(EveActionKind.GENERATE_PAIR, phi_guess)
    if outcome is Detection.SPLIT:
        return alice_state(gain, phi_guess), EveAction(EveActionKind.REPLACE_STATE, phi_guess)
    alpha = 1.0 - transmission
    bob = phase_shift(project_eve_vacuum(remaining), -phi_e, 0.0, Subsystem.BOB)
    if alpha > 0:
        bob = opa_apply(bob, gain.scaled(alpha), phi_guess, Subsystem.BOB)
    return bob, EveAction(EveActionKind.MANIPULATE, phi_guess, -phi_e, alpha)


def replenish_alternatives(remaining: PerturbativeKet, guess: float, transmission: float,
                           gain: ComplexGain, phi_e: float) -> Dict[str, PerturbativeKet]:
    """Bob-side states of the three options open to Eve after a no-click outcome."""
    phi_guess = (guess - phi_e) % TWO_PI
    manipulated, _ = eve_replenish(Detection.NONE, guess, remaining, transmission, gain, phi_e)
    return {
        "do-nothing": project_eve_vacuum(remaining),
        "regenerate": alice_state(gain, phi_guess),
        "manipulate": manipulated,
    }


class SRCase(Enum):
    REGENERATED = "regenerated"
    MANIPULATED_WRONG_BASIS = "manipulated-wrong-basis"
    MANIPULATED_WRONG_BIT = "manipulated-wrong-bit"
    MANIPULATED_CORRECT = "manipulated-correct"


def steal_resend_bob_expectation(case: SRCase, transmission: float, phase_sum: float) -> float:
    """
    Bob's mean photon number in units of |g|^2 for each steal-resend case.

    For REGENERATED phase_sum is phi_A' + phi_B and may take any value; the
    manipulated cases are defined at phi_A + phi_B in {0, pi}.
    """
    case = SRCase(case)
    t, r = transmission, 1.0 - transmission
    if case is SRCase.REGENERATED:
        return 2 + 2 * math.cos(phase_sum)
    if case is SRCase.MANIPULATED_CORRECT:
        return 2 + 2 * math.cos(phase_sum)
    w = wrap(phase_sum)
    if abs(w) < _PHASE_TOL:
        constructive = True
    elif abs(abs(w) - math.pi) < _PHASE_TOL:
        constructive = False
    else:
        raise PhysicsRangeError(f"{case.value} is defined at phase-sum 0 or pi, got {phase_sum}")
    if case is SRCase.MANIPULATED_WRONG_BASIS:
        return 2 * (1 + t ** 2) if constructive else 2 * r ** 2
    return 4 * t ** 2 if constructive else 4 * r ** 2


def steal_resend_case_expectations(transmission: float, gain: Union[ComplexGain, float],
                                   weights: OutcomeWeights = OutcomeWeights.TABULATED
                                   ) -> Tuple[float, float]:
    """
    Bob's mean counts at phase-sum 0 and pi, in units of |g|^2, averaged over
    phi_AE, Eve's outcome table and her guesses with the closed-form cases.

    phi_AE is uniform over 0, +-pi/2, pi: Alice's bit and Eve's basis are
    independent fair draws.
    """
    if not 0.0 <= transmission <= 1.0:
        raise PhysicsRangeError(f"transmission out of range: {transmission}")
    reflectance = 1.0 - transmission
    totals = [0.0, 0.0]
    for phi_ae in _TABULATED_PAIR:
        dist = eve_outcome_probs(phi_ae, reflectance, gain, weights)
        right_basis = abs(math.sin(phi_ae)) < _PHASE_TOL
        for k, phase_sum in enumerate((0.0, math.pi)):
            n = 0.0
            for outcome, p in dist.coarse().items():
                for guess, q in eve_guess_probs(outcome).items():
                    offset = guess - phi_ae
                    if outcome is not Detection.NONE:
                        case, at = SRCase.REGENERATED, phase_sum + offset
                    elif not right_basis:
                        case, at = SRCase.MANIPULATED_WRONG_BASIS, phase_sum
                    elif abs(wrap(offset)) < _PHASE_TOL:
                        case, at = SRCase.MANIPULATED_CORRECT, phase_sum
                    else:
                        case, at = SRCase.MANIPULATED_WRONG_BIT, phase_sum
                    n += p * q * steal_resend_bob_expectation(case, transmission, at)
            totals[k] += n / len(_TABULATED_PAIR)
    return totals[0], totals[1]


def steal_resend_case_contrast(transmission: float, gain: Union[ComplexGain, float],
                               weights: OutcomeWeights = OutcomeWeights.TABULATED) -> float:
    n0, npi = steal_resend_case_expectations(transmission, gain, weights)
    return (n0 - npi) / (n0 + npi)


# Branch enumeration

def attack_branches(attack: AttackModel, gain: ComplexGain, phi_a: float,
                    transmission: float = 1.0) -> Tuple[AttackBranch, ...]:
    """
    Every state Bob can receive for Alice's phase phi_a, with probabilities.

    `transmission` is the line's own loss after the attack stage; for a plain
    steal it merges with the tap into a single beamsplitter.
    """
    source = alice_state(gain, phi_a)
    kind = attack.kind
    if kind is AttackKind.STEAL_RESEND and attack.reflectance == 0.0:
        kind = AttackKind.NONE

    if kind is AttackKind.NONE:
        return (AttackBranch(1.0, apply_line_loss(source, transmission), "untampered"),)

    if kind is AttackKind.STEAL:
        t_eff = transmission * attack.transmission
        ket = beamsplit_to_eve(source, 1.0 - t_eff, attack.convention)
        return (AttackBranch(1.0, ket, "steal"),)

    branches: List[AttackBranch] = []
    if kind is AttackKind.INTERCEPT_RESEND:
        for phi_e in EVE_BASIS_PHASES:
            for guess, p in intercept_guess_probs(source, phi_e, gain, attack.idealized).items():
                if p <= 0:
                    continue
                phi_guess = (guess - phi_e) % TWO_PI
                ket = apply_line_loss(alice_state(gain, phi_guess), transmission)
                branches.append(AttackBranch(
                    0.5 * p, ket, f"E{phi_e:.3f}-guess{guess:.3f}",
                    EveAction(EveActionKind.REPLACE_STATE, phi_guess)))
        return tuple(branches)

    for phi_e in EVE_BASIS_PHASES:
        joint = eve_measurement_ket(source, phi_e, attack.reflectance, gain, attack.convention)
        dist = eve_outcomes(joint, attack.reflectance, gain, attack.weights)
        for outcome, p in dist.coarse().items():
            if p <= 0:
                continue
            for guess, q in eve_guess_probs(outcome).items():
                ket, action = eve_replenish(outcome, guess, joint, attack.transmission, gain, phi_e)
                branches.append(AttackBranch(
                    0.5 * p * q, apply_line_loss(ket, transmission),
                    f"E{phi_e:.3f}-{outcome.value}-guess{guess:.3f}", action))
    return tuple(branches)


# Predictors

def unequal_gain_visibility(g_a: float, g_b: float, transmission: float) -> float:
    """2 g_A g_B T / (g_B^2 + T g_A^2)."""
    den = g_b ** 2 + transmission * g_a ** 2
    return 0.0 if den == 0 else 2 * g_a * g_b * transmission / den


def eve_contrast(reflectance: float) -> float:
    """Contrast of Eve's own interference in a steal attack, 2R/(1+R)."""
    return 2 * reflectance / (1 + reflectance)


def predicted_expectations(attack: AttackModel, gain: Union[ComplexGain, float],
                           bob_gain_ratio: float = 1.0,
                           transmission: float = 1.0) -> Tuple[float, float]:
    """
    Bob's mean counts per slot at phase-sum 0 and at pi, averaged exactly over
    Alice's bases and bits, both differential windows, Eve's basis, her
    outcomes and her guesses.
    """
    gain = gain if isinstance(gain, ComplexGain) else ComplexGain(float(gain))
    bob_gain = gain.scaled(bob_gain_ratio)
    high, low = [], []
    for basis in Basis:
        for bit in (0, 1):
            phi_a = alice_encode(bit, basis)
            branches = attack_branches(attack, gain, phi_a, transmission)
            for window in (1, 2):
                phi_b = bob_phase(basis, window)
                n = sum(b.weight * bob_signal_count(b.ket, bob_gain, phi_b) for b in branches)
                (high if abs(wrap(phi_a + phi_b)) < _PHASE_TOL else low).append(n)
    return float(np.mean(high)), float(np.mean(low))


def predicted_contrast(attack: AttackModel, gain: Union[ComplexGain, float],
                       bob_gain_ratio: float = 1.0, transmission: float = 1.0) -> float:
    """
    Contrast Bob expects under an attack.

    None and Steal use the closed form 2 g_A g_B T / (g_B^2 + T g_A^2)
    (2T/(1+T) for equal gains); the measuring attacks are averaged exactly
    over their branches.
    """
    g_a = _magnitude(gain)
    if attack.kind in (AttackKind.NONE, AttackKind.STEAL):
        return unequal_gain_visibility(g_a, g_a * bob_gain_ratio,
                                       transmission * attack.transmission)
    n0, npi = predicted_expectations(attack, gain, bob_gain_ratio, transmission)
    return (n0 - npi) / (n0 + npi) if n0 + npi > 0 else 0.0


def predicted_qber(attack: AttackModel, gain: Union[ComplexGain, float],
                   bob_gain_ratio: float = 1.0, transmission: float = 1.0) -> float:
    """Low-flux error rate (1 - V) / 2: a click lands in the wrong half with probability N_pi / (N_0 + N_pi)."""
    return (1.0 - predicted_contrast(attack, gain, bob_gain_ratio, transmission)) / 2


@lru_cache(maxsize=4096)
def _steal_resend_point(transmission: float, g: float, weights: OutcomeWeights) -> float:
    return predicted_contrast(AttackModel.steal_resend(1.0 - transmission, weights=weights), g)


def steal_resend_curve(g: float, t_grid: Sequence[float],
                       weights: OutcomeWeights = OutcomeWeights.TABULATED
                       ) -> List[Tuple[float, float, float]]:
    """(T, V_steal_resend, V_steal) rows."""
    weights = OutcomeWeights(weights)
    rows = []
    for t in t_grid:
        t = float(t)
        rows.append((t, _steal_resend_point(t, g, weights), 2 * t / (1 + t)))
    return rows


def steal_resend_crossover(g: float, steps: int = 400,
                           weights: OutcomeWeights = OutcomeWeights.TABULATED) -> Optional[float]:
    """
    Transmission above which the steal-resend contrast stays below the steal
    contrast at every grid point short of T = 1, where both reach 1.

    Returns None when no such point exists on [0, 1).
    """
    grid = np.linspace(0.0, 1.0, steps + 1)[:-1]
    diff = [sr - st for _, sr, st in steal_resend_curve(g, grid, weights)]
    above = [i for i, d in enumerate(diff) if d >= 0]
    if not above:
        dbg(f"Steal-resend sotto steal su tutta la griglia (g = {g})")
        return None
    i = above[-1]
    if i == len(diff) - 1:
        return None
    t0, t1 = grid[i], grid[i + 1]
    cross = t0 + (t1 - t0) * diff[i] / (diff[i] - diff[i + 1])
    dbg(f"Incrocio steal-resend/steal a T = {cross:.4f} (g = {g}, pesi {OutcomeWeights(weights).value})")
    return float(cross)


def loss_detection_margin(baseline: float = BASELINE_TRANSMISSION, extra_loss: float = EXTRA_LOSS,
                          gain: float = 0.1) -> Tuple[float, float, float]:
    """
    Contrast on a lossy line with and without an extra fractional loss.

    Returns:
        (V at baseline, V with the extra loss, their difference)
    """
    v_base = predicted_contrast(AttackModel.none(), gain, transmission=baseline)
    v_lossy = predicted_contrast(AttackModel.none(), gain, transmission=baseline * (1 - extra_loss))
    return v_base, v_lossy, v_base - v_lossy
