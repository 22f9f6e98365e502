"""
protocols.qkd module.

This module contains the multiplexed QKD session:
- Per-bit detection records from the two differential half-windows
- Decoding, sifting and scoring (QBER, per-channel contrast)
- Sampled and expectation-mode sessions over all channels
"""

import math
from dataclasses import dataclass, field, replace
from enum import Enum
from functools import lru_cache
from typing import Dict, Iterable, Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np

from config.constants import (
    DEFAULT_BITS_PER_CHANNEL, DEFAULT_DARK_COUNT, DEFAULT_DETECTOR_EFFICIENCY,
    DEFAULT_MASTER_SEED, DEFAULT_SLOTS_PER_WINDOW, GAIN_MAX, RNG_BLOCK_BITS,
)
from core.quantum_core import ComplexGain
from protocols.adversary import AttackModel, attack_branches
from protocols.channel import bob_signal_count
from protocols.encoding import Basis, alice_encode, bob_phase
from spectral.channels import CrosstalkMode, CrosstalkModel, apply_crosstalk, blur_factors
from utils.errors import PhysicsRangeError
from utils.logger import dbg
from utils.seeding import block_ranges, child_seed, stream
from utils.stats import contrast, contrast_with_error


class Mode(Enum):
    SAMPLED = "sampled"
    EXPECTATION = "expectation"


class Outcome(Enum):
    BIT0 = "bit0"
    BIT1 = "bit1"
    ERASURE = "erasure"
    INCONCLUSIVE = "inconclusive"


@dataclass(frozen=True)
class DetectionRecord:
    channel: int
    alice_basis: Basis
    bob_basis: Basis
    alice_bit: int
    counts_w1: int
    counts_w2: int
    expected_N: float

    def __post_init__(self):
        if self.counts_w1 < 0 or self.counts_w2 < 0:
            raise PhysicsRangeError("counts must be non-negative")

    @property
    def matched(self) -> bool:
        return self.alice_basis == self.bob_basis


@dataclass(frozen=True, eq=False)
class RecordBatch:
    """Columnar detection records of a sampled session."""

    channel: np.ndarray
    alice_basis: np.ndarray
    bob_basis: np.ndarray
    alice_bit: np.ndarray
    counts_w1: np.ndarray
    counts_w2: np.ndarray
    expected_N: np.ndarray

    def __len__(self) -> int:
        return int(self.channel.size)

    def __iter__(self) -> Iterator[DetectionRecord]:
        for i in range(len(self)):
            yield DetectionRecord(int(self.channel[i]), Basis(int(self.alice_basis[i])),
                                  Basis(int(self.bob_basis[i])), int(self.alice_bit[i]),
                                  int(self.counts_w1[i]), int(self.counts_w2[i]),
                                  float(self.expected_N[i]))

    @classmethod
    def from_records(cls, records: Iterable[DetectionRecord]) -> "RecordBatch":
        rows = list(records)
        return cls(
            np.array([r.channel for r in rows], dtype=np.int32),
            np.array([int(r.alice_basis) for r in rows], dtype=np.int8),
            np.array([int(r.bob_basis) for r in rows], dtype=np.int8),
            np.array([r.alice_bit for r in rows], dtype=np.int8),
            np.array([r.counts_w1 for r in rows], dtype=np.int64),
            np.array([r.counts_w2 for r in rows], dtype=np.int64),
            np.array([r.expected_N for r in rows], dtype=float),
        )

    @classmethod
    def concatenate(cls, batches: Sequence["RecordBatch"]) -> "RecordBatch":
        names = ("channel", "alice_basis", "bob_basis", "alice_bit",
                 "counts_w1", "counts_w2", "expected_N")
        return cls(*(np.concatenate([getattr(b, n) for b in batches]) for n in names))


def _per_channel(value, n: int, name: str) -> tuple:
    if isinstance(value, (list, tuple, np.ndarray)):
        if len(value) != n:
            raise PhysicsRangeError(f"{name}: expected {n} values, got {len(value)}")
        return tuple(value)
    return (value,) * n


@dataclass(frozen=True)
class SessionConfig:
    """
    Everything a session needs besides the attack.

    `gains`, `transmission` and `phase_offsets` take one value for all
    channels or one per channel. `window1_bit` is the bit decoded from a
    click in the first half-window only.
    """

    channels: int = 1
    gains: Union[ComplexGain, Tuple[ComplexGain, ...]] = ComplexGain(0.1)
    slots_per_window: int = DEFAULT_SLOTS_PER_WINDOW
    detector_efficiency: float = DEFAULT_DETECTOR_EFFICIENCY
    dark_count: float = DEFAULT_DARK_COUNT
    bits_per_channel: int = DEFAULT_BITS_PER_CHANNEL
    master_seed: int = DEFAULT_MASTER_SEED
    transmission: Union[float, Tuple[float, ...]] = 1.0
    phase_offsets: Union[float, Tuple[float, ...]] = 0.0
    bob_gain_ratio: float = 1.0
    window1_bit: int = 1
    reveal_fraction: float = 1.0
    crosstalk: Optional[CrosstalkModel] = field(default=None, compare=False, hash=False)

    def __post_init__(self):
        if self.channels < 1:
            raise PhysicsRangeError(f"channels must be at least 1, got {self.channels}")
        m = self.slots_per_window
        if m < 2 or m % 2:
            raise PhysicsRangeError(f"coherence slots per window must be even and >= 2, got {m}")
        if not 0.0 <= self.detector_efficiency <= 1.0:
            raise PhysicsRangeError(f"detector efficiency out of range: {self.detector_efficiency}")
        if not 0.0 <= self.dark_count <= 1.0:
            raise PhysicsRangeError(f"dark count per slot out of range: {self.dark_count}")
        if self.bits_per_channel < 0:
            raise PhysicsRangeError("bits_per_channel must be non-negative")
        if self.window1_bit not in (0, 1):
            raise PhysicsRangeError(f"window1_bit must be 0 or 1, got {self.window1_bit}")
        if not 0.0 < self.reveal_fraction <= 1.0:
            raise PhysicsRangeError(f"reveal_fraction out of range: {self.reveal_fraction}")
        if self.bob_gain_ratio < 0:
            raise PhysicsRangeError("bob_gain_ratio must be non-negative")
        object.__setattr__(self, "gains", _per_channel(self.gains, self.channels, "gains"))
        object.__setattr__(self, "transmission",
                           tuple(float(t) for t in _per_channel(self.transmission, self.channels, "transmission")))
        object.__setattr__(self, "phase_offsets",
                           tuple(float(p) for p in _per_channel(self.phase_offsets, self.channels, "phase_offsets")))
        for t in self.transmission:
            if not 0.0 <= t <= 1.0:
                raise PhysicsRangeError(f"transmission out of range: {t}")
        if self.crosstalk is not None and self.crosstalk.n_channels != self.channels:
            raise PhysicsRangeError(
                f"crosstalk matrix is {self.crosstalk.n_channels}x{self.crosstalk.n_channels} "
                f"for {self.channels} channels")
        for c, g in enumerate(self.gains):
            g_b = g.magnitude * self.bob_gain_ratio
            if g_b > GAIN_MAX:
                raise PhysicsRangeError(
                    f"Bob gain {g_b:.4g} on channel {c} outside the perturbative regime (max {GAIN_MAX})")
        p = self.max_slot_probability
        if p > 1.0:
            raise PhysicsRangeError(f"per-slot probability {p:.4g} exceeds 1")

    @property
    def half_window(self) -> int:
        return self.slots_per_window // 2

    def bob_gain(self, channel: int) -> ComplexGain:
        return self.gains[channel].scaled(self.bob_gain_ratio)

    @property
    def max_slot_probability(self) -> float:
        """Upper bound on expected_N * eta + dark over any state Bob can see."""
        worst = 0.0
        for g in self.gains:
            g_a, g_b = g.magnitude, g.magnitude * self.bob_gain_ratio
            worst = max(worst, (g_a + g_b) ** 2)
        return worst * self.detector_efficiency + self.dark_count


@dataclass
class SessionReport:
    """Outcome of one session; `qber_defined` is False when nothing was sifted."""

    mode: Mode
    attack: str
    sifted_key_a: np.ndarray
    sifted_key_b: np.ndarray
    qber: float
    qber_defined: bool
    contrast: Tuple[Optional[float], ...]
    contrast_sem: Tuple[float, ...]
    i_max: Tuple[float, ...]
    i_min: Tuple[float, ...]
    channel_qber: Tuple[float, ...]
    erasure_rate: float
    inconclusive_rate: float
    n_records: int
    n_sifted: int

    @property
    def mean_contrast(self) -> Optional[float]:
        return contrast(float(np.mean(self.i_max)), float(np.mean(self.i_min)))

    def to_dict(self) -> Dict:
        def num(x):
            return None if x is None or (isinstance(x, float) and math.isnan(x)) else float(x)

        return {
            "mode": self.mode.value,
            "attack": self.attack,
            "qber": num(self.qber),
            "qber_defined": self.qber_defined,
            "mean_contrast": num(self.mean_contrast),
            "contrast": [num(v) for v in self.contrast],
            "contrast_sem": [num(v) for v in self.contrast_sem],
            "i_max": [num(v) for v in self.i_max],
            "i_min": [num(v) for v in self.i_min],
            "channel_qber": [num(v) for v in self.channel_qber],
            "erasure_rate": num(self.erasure_rate),
            "inconclusive_rate": num(self.inconclusive_rate),
            "n_records": self.n_records,
            "n_sifted": self.n_sifted,
            "sifted_key_length": int(self.sifted_key_a.size),
        }


# Branch tables

@dataclass(frozen=True, eq=False)
class _Fringe:
    """Bob's mean count N(phi) = a + Re(u e^{i(phi - phi_w1)}) for each branch."""

    cumulative: np.ndarray
    weights: np.ndarray
    a: np.ndarray
    u: np.ndarray


@lru_cache(maxsize=4096)
def _branch_table(attack: AttackModel, gain: ComplexGain, bob_gain: ComplexGain,
                  transmission: float, offset: float, alice_bit: int, alice_basis: int,
                  bob_basis: int, window1_bit: int) -> _Fringe:
    phi_a = alice_encode(alice_bit, Basis(alice_basis)) + offset
    phi_w1 = bob_phase(Basis(bob_basis), 1, window1_bit)
    weights, a, u = [], [], []
    for branch in attack_branches(attack, gain, phi_a, transmission):
        n0 = bob_signal_count(branch.ket, bob_gain, phi_w1)
        npi = bob_signal_count(branch.ket, bob_gain, phi_w1 + math.pi)
        nq = bob_signal_count(branch.ket, bob_gain, phi_w1 + math.pi / 2)
        mean = (n0 + npi) / 2
        weights.append(branch.weight)
        a.append(mean)
        u.append(complex(n0 - mean, mean - nq))
    w = np.array(weights)
    w = w / w.sum()
    cum = np.cumsum(w)
    cum[-1] = 1.0
    return _Fringe(cum, w, np.array(a), np.array(u))


def _table(config: SessionConfig, attack: AttackModel, channel: int,
           alice_bit: int, alice_basis: int, bob_basis: int) -> _Fringe:
    return _branch_table(attack, config.gains[channel], config.bob_gain(channel),
                         config.transmission[channel], config.phase_offsets[channel],
                         int(alice_bit), int(alice_basis), int(bob_basis), config.window1_bit)


def _slot_probability(n: np.ndarray, config: SessionConfig) -> np.ndarray:
    p = n * config.detector_efficiency + config.dark_count
    if np.any(p > 1.0):
        raise PhysicsRangeError(f"per-slot probability {float(np.max(p)):.4g} exceeds 1")
    return np.clip(p, 0.0, 1.0)


def simulate_bit(channel: int, alice_bit: int, alice_basis: Basis, bob_basis: Basis,
                 attack: AttackModel, rng: np.random.Generator,
                 config: SessionConfig) -> DetectionRecord:
    """
    One bit on one channel, without crosstalk.

    The attack branch is drawn first, then the counts of both half-windows
    as Binomial(M/2, N eta + dark).
    """
    table = _table(config, attack, channel, alice_bit, alice_basis, bob_basis)
    k = int(np.searchsorted(table.cumulative, rng.random(), side="right"))
    k = min(k, table.a.size - 1)
    n = np.array([table.a[k] + table.u[k].real, table.a[k] - table.u[k].real])
    p = _slot_probability(n, config)
    c1, c2 = rng.binomial(config.half_window, p)
    return DetectionRecord(channel, Basis(alice_basis), Basis(bob_basis), int(alice_bit),
                           int(c1), int(c2), float(n.sum()))


def differential_decode(record: DetectionRecord, window1_bit: int = 1) -> Outcome:
    """Counts in exactly one half-window give a bit; none is an erasure, both inconclusive."""
    c1, c2 = record.counts_w1, record.counts_w2
    if c1 > 0 and c2 == 0:
        bit = window1_bit
    elif c2 > 0 and c1 == 0:
        bit = 1 - window1_bit
    elif c1 == 0 and c2 == 0:
        return Outcome.ERASURE
    else:
        return Outcome.INCONCLUSIVE
    return Outcome.BIT1 if bit == 1 else Outcome.BIT0


# Scoring

def sift_and_score(records: Union[RecordBatch, Iterable[DetectionRecord]],
                   channels: Optional[int] = None, window1_bit: int = 1,
                   reveal_fraction: float = 1.0, attack: str = "none") -> SessionReport:
    """
    Keep matched-basis decodable positions, score the key and the contrast.

    Contrast per channel uses the first `reveal_fraction` of the
    matched-basis records (erasures included): I_max is the mean count in the
    constructive half-window, I_min in the destructive one.
    """
    batch = records if isinstance(records, RecordBatch) else RecordBatch.from_records(records)
    n_channels = channels if channels is not None else (int(batch.channel.max()) + 1 if len(batch) else 1)
    matched = batch.alice_basis == batch.bob_basis
    c1, c2 = batch.counts_w1, batch.counts_w2
    only1 = (c1 > 0) & (c2 == 0)
    only2 = (c2 > 0) & (c1 == 0)
    erased = (c1 == 0) & (c2 == 0)
    inconclusive = (c1 > 0) & (c2 > 0)
    keep = matched & (only1 | only2)
    bob_bits = np.where(only1, window1_bit, 1 - window1_bit).astype(np.int8)
    key_a = batch.alice_bit[keep].astype(np.int8)
    key_b = bob_bits[keep]
    n_sifted = int(key_a.size)
    qber = float(np.mean(key_a != key_b)) if n_sifted else math.nan

    constructive_w1 = batch.alice_bit == window1_bit
    high = np.where(constructive_w1, c1, c2)
    low = np.where(constructive_w1, c2, c1)
    v, sem, i_max, i_min, ch_qber = [], [], [], [], []
    for c in range(n_channels):
        idx = np.flatnonzero(matched & (batch.channel == c))
        idx = idx[:max(1, int(math.ceil(reveal_fraction * idx.size)))] if idx.size else idx
        if idx.size:
            hi, lo = high[idx], low[idx]
            vc, sc = contrast_with_error(hi, lo)
            i_max.append(float(hi.mean()))
            i_min.append(float(lo.mean()))
        else:
            vc, sc = None, math.nan
            i_max.append(0.0)
            i_min.append(0.0)
        v.append(vc)
        sem.append(sc)
        kc = keep & (batch.channel == c)
        ch_qber.append(float(np.mean(batch.alice_bit[kc] != bob_bits[kc])) if kc.any() else math.nan)

    n_matched = int(matched.sum())
    return SessionReport(
        mode=Mode.SAMPLED, attack=attack,
        sifted_key_a=key_a, sifted_key_b=key_b,
        qber=qber, qber_defined=n_sifted > 0,
        contrast=tuple(v), contrast_sem=tuple(sem),
        i_max=tuple(i_max), i_min=tuple(i_min), channel_qber=tuple(ch_qber),
        erasure_rate=float((erased & matched).sum() / n_matched) if n_matched else math.nan,
        inconclusive_rate=float((inconclusive & matched).sum() / n_matched) if n_matched else math.nan,
        n_records=len(batch), n_sifted=n_sifted,
    )


# Sessions

_COMBOS = tuple((bit, ba, bb) for ba in (0, 1) for bb in (0, 1) for bit in (0, 1))


def _sample_block(config: SessionConfig, attack: AttackModel, block: int,
                  start: int, stop: int) -> RecordBatch:
    size = stop - start
    n_ch = config.channels
    rngs = [stream(config.master_seed, c, block) for c in range(n_ch)]
    bits = np.empty((n_ch, size), dtype=np.int8)
    ba = np.empty_like(bits)
    bb = np.empty_like(bits)
    a = np.empty((n_ch, size))
    u = np.empty((n_ch, size), dtype=complex)
    psi = np.empty((n_ch, size))
    for c, rng in enumerate(rngs):
        bits[c] = rng.integers(0, 2, size)
        ba[c] = rng.integers(0, 2, size)
        bb[c] = rng.integers(0, 2, size)
        draw = rng.random(size)
        for bit, basis_a, basis_b in _COMBOS:
            mask = (bits[c] == bit) & (ba[c] == basis_a) & (bb[c] == basis_b)
            if not mask.any():
                continue
            table = _table(config, attack, c, bit, basis_a, basis_b)
            k = np.minimum(np.searchsorted(table.cumulative, draw[mask], side="right"),
                           table.a.size - 1)
            a[c, mask] = table.a[k]
            u[c, mask] = table.u[k]
            psi[c, mask] = (alice_encode(bit, Basis(basis_a)) + config.phase_offsets[c]
                            + bob_phase(Basis(basis_b), 1, config.window1_bit))

    model = config.crosstalk
    if model is not None and model.mode is CrosstalkMode.PHASE_BLUR:
        u = u * blur_factors(model, psi)
    n1 = a + u.real
    n2 = a - u.real
    if model is not None and model.mode is CrosstalkMode.INTENSITY:
        n1 = apply_crosstalk(model, np.clip(n1, 0, None))
        n2 = apply_crosstalk(model, np.clip(n2, 0, None))
    p1 = _slot_probability(n1, config)
    p2 = _slot_probability(n2, config)

    counts1 = np.empty((n_ch, size), dtype=np.int64)
    counts2 = np.empty_like(counts1)
    for c, rng in enumerate(rngs):
        counts1[c] = rng.binomial(config.half_window, p1[c])
        counts2[c] = rng.binomial(config.half_window, p2[c])
    channel = np.repeat(np.arange(n_ch, dtype=np.int32), size)
    return RecordBatch(channel, ba.ravel(), bb.ravel(), bits.ravel(),
                       counts1.ravel(), counts2.ravel(), (n1 + n2).ravel())


def simulate_session(config: SessionConfig, attack: AttackModel) -> RecordBatch:
    """All detection records of a sampled session, channel-major within each block."""
    batches = [_sample_block(config, attack, b, start, stop)
               for b, start, stop in block_ranges(config.bits_per_channel, RNG_BLOCK_BITS)]
    if not batches:
        return RecordBatch.from_records([])
    return RecordBatch.concatenate(batches)


def _expectation_report(config: SessionConfig, attack: AttackModel) -> SessionReport:
    """
    Exact averages over bases, bits and attack branches.

    Crosstalk is taken in the mean-field sense: a neighbour contributes its
    count averaged over its own random choices.
    """
    n_ch = config.channels
    half = config.half_window
    eta, dark = config.detector_efficiency, config.dark_count
    tables = {(c, combo): _table(config, attack, c, *combo) for c in range(n_ch) for combo in _COMBOS}
    mean_n = np.array([np.mean([float(tables[(c, k)].weights @ tables[(c, k)].a) for k in _COMBOS])
                       for c in range(n_ch)])
    model = config.crosstalk
    diag = np.ones(n_ch) if model is None else np.diag(model.matrix)
    leak_in = np.zeros(n_ch) if model is None else model.matrix @ mean_n - diag * mean_n

    i_max, i_min, ch_qber = [], [], []
    right_all = wrong_all = erased_all = both_all = 0.0
    n_matched = 0
    for c in range(n_ch):
        hi_c, lo_c, right_c, wrong_c = [], [], 0.0, 0.0
        for bit, basis_a, basis_b in _COMBOS:
            if basis_a != basis_b:
                continue
            t = tables[(c, (bit, basis_a, basis_b))]
            u = t.u
            if model is not None and model.mode is CrosstalkMode.PHASE_BLUR:
                u = u * diag[c]
            n1, n2 = t.a + u.real, t.a - u.real
            if model is not None and model.mode is CrosstalkMode.INTENSITY:
                n1 = diag[c] * n1 + leak_in[c]
                n2 = diag[c] * n2 + leak_in[c]
            p1, p2 = _slot_probability(n1, config), _slot_probability(n2, config)
            q1, q2 = (1 - p1) ** half, (1 - p2) ** half
            only1, only2 = (1 - q1) * q2, (1 - q2) * q1
            w = t.weights
            const_w1 = bit == config.window1_bit
            hi_c.append(half * float(w @ (p1 if const_w1 else p2)))
            lo_c.append(half * float(w @ (p2 if const_w1 else p1)))
            right = float(w @ (only1 if const_w1 else only2))
            wrong = float(w @ (only2 if const_w1 else only1))
            right_c += right
            wrong_c += wrong
            erased_all += float(w @ (q1 * q2))
            both_all += float(w @ ((1 - q1) * (1 - q2)))
            n_matched += 1
        i_max.append(float(np.mean(hi_c)))
        i_min.append(float(np.mean(lo_c)))
        ch_qber.append(wrong_c / (right_c + wrong_c) if right_c + wrong_c > 0 else math.nan)
        right_all += right_c
        wrong_all += wrong_c

    decodable = right_all + wrong_all
    empty = np.zeros(0, dtype=np.int8)
    return SessionReport(
        mode=Mode.EXPECTATION, attack=attack.label,
        sifted_key_a=empty, sifted_key_b=empty,
        qber=wrong_all / decodable if decodable > 0 else math.nan,
        qber_defined=decodable > 0,
        contrast=tuple(contrast(h, l) for h, l in zip(i_max, i_min)),
        contrast_sem=tuple(0.0 for _ in i_max),
        i_max=tuple(i_max), i_min=tuple(i_min), channel_qber=tuple(ch_qber),
        erasure_rate=erased_all / n_matched, inconclusive_rate=both_all / n_matched,
        n_records=0, n_sifted=0,
    )


def run_session(config: SessionConfig, attack: AttackModel = AttackModel(),
                mode: Union[Mode, str] = Mode.SAMPLED) -> SessionReport:
    """
    Run every channel of a session and score it.

    Sampled sessions are a pure function of master_seed: each (channel,
    block of bits) owns its random stream.
    """
    mode = Mode(mode)
    dbg(f"Sessione {mode.value}: {config.channels} canali, attacco {attack.label}")
    if mode is Mode.EXPECTATION:
        report = _expectation_report(config, attack)
    else:
        batch = simulate_session(config, attack)
        report = sift_and_score(batch, config.channels, config.window1_bit,
                                config.reveal_fraction, attack.label)
    dbg(f"Sessione conclusa: QBER {report.qber:.4g}, contrasto medio {report.mean_contrast}")
    return report


def contrast_drop(config: SessionConfig, extra_loss: float,
                  attack: AttackModel = AttackModel()) -> Tuple[float, float]:
    """
    Sampled contrast lost on channel 0 to an extra fractional line loss.

    The lossy session runs on its own seed; the standard error adds the two
    sessions' errors in quadrature.

    Returns:
        (V at the configured transmission - V with the extra loss, standard error)
    """
    if not 0.0 <= extra_loss < 1.0:
        raise PhysicsRangeError(f"extra loss out of range: {extra_loss}")
    lossy = replace(config, transmission=tuple(t * (1 - extra_loss) for t in config.transmission),
                    master_seed=child_seed(config.master_seed, 1))
    base_report = run_session(config, attack)
    lossy_report = run_session(lossy, attack)
    v_base, v_lossy = base_report.contrast[0], lossy_report.contrast[0]
    if v_base is None or v_lossy is None:
        return math.nan, math.nan
    sigma = math.hypot(base_report.contrast_sem[0], lossy_report.contrast_sem[0])
    dbg(f"Calo di contrasto {v_base - v_lossy:.6f} +- {sigma:.2e} con perdita extra {extra_loss}")
    return v_base - v_lossy, sigma
