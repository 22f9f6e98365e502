"""
spectral.channels module.

This module contains the frequency-multiplexed channel layer:
- Channel grid with gain envelope and dispersion offsets
- Crosstalk (leakage) model between neighbouring channels
- The neighbour-correlation error metric
- Dispersion pre-compensation
"""

import math
from dataclasses import dataclass, replace
from enum import Enum
from typing import Optional, Sequence, Tuple

import numpy as np

from config.constants import (
    BANDWIDTH_PRESETS, CENTER_WAVELENGTH, CHANNEL_GAP, CHANNEL_WIDTH,
    DEFAULT_BANDWIDTH_PRESET, DISPERSION_BAND_POINTS, GAIN_MAX,
    MODULATOR_SPAN, SPEED_OF_LIGHT,
)
from utils.errors import PhysicsRangeError
from utils.logger import dbg

ROW_SUM_TOL = 1e-12


class GainEnvelope(Enum):
    FLAT = "flat"
    RAISED_COSINE = "raised-cosine"


class CrosstalkMode(Enum):
    INTENSITY = "intensity"
    PHASE_BLUR = "phase-blur"


def capacity(span: float, width: float = CHANNEL_WIDTH, gap: float = CHANNEL_GAP) -> int:
    """Number of non-overlapping channels that fit on the modulator plane."""
    if span <= 0 or width <= 0 or gap < 0:
        raise PhysicsRangeError(f"non-positive geometry: span={span}, width={width}, gap={gap}")
    return int(math.floor(span / (width + gap) + 1e-9))


def bandwidth_to_angular(bandwidth: float, wavelength: float = CENTER_WAVELENGTH) -> float:
    """Full angular-frequency width of a wavelength band."""
    return 2 * math.pi * SPEED_OF_LIGHT * bandwidth / wavelength ** 2


@dataclass(frozen=True)
class ChannelGrid:
    """
    Channels laid out on the modulator plane.

    Detunings are measured from half the pump frequency; channel c pairs the
    signal at +detuning with the idler at -detuning.
    """

    detunings: Tuple[float, ...]
    gains: Tuple[float, ...]
    dispersion: Tuple[float, ...]
    width: float = CHANNEL_WIDTH
    gap: float = CHANNEL_GAP
    span: float = MODULATOR_SPAN
    bandwidth: float = BANDWIDTH_PRESETS[DEFAULT_BANDWIDTH_PRESET]
    contrast_multipliers: Optional[Tuple[float, ...]] = None

    def __post_init__(self):
        n = len(self.detunings)
        if len(self.gains) != n or len(self.dispersion) != n:
            raise PhysicsRangeError("grid arrays must all have one entry per channel")
        if n * (self.width + self.gap) > self.span * (1 + 1e-9):
            raise PhysicsRangeError(
                f"{n} channels of {self.width + self.gap:g} m overlap on a {self.span:g} m span")
        for g in self.gains:
            if not 0 <= g <= GAIN_MAX:
                raise PhysicsRangeError(f"channel gain {g} outside [0, {GAIN_MAX}]")

    @property
    def n_channels(self) -> int:
        return len(self.detunings)

    @property
    def channel_band(self) -> float:
        """Angular width of one channel."""
        return bandwidth_to_angular(self.bandwidth) / 2 / max(self.n_channels, 1)


def build_grid(n_channels: Optional[int] = None, gain: float = 0.1,
               span: float = MODULATOR_SPAN, width: float = CHANNEL_WIDTH,
               gap: float = CHANNEL_GAP, envelope: GainEnvelope = GainEnvelope.FLAT,
               dispersion_coefficient: float = 0.0,
               bandwidth: Optional[float] = None,
               bandwidth_preset: str = DEFAULT_BANDWIDTH_PRESET) -> ChannelGrid:
    """
    Lay out the channel grid.

    Args:
        n_channels: Channels to use (default: as many as fit)
        gain: Peak gain magnitude
        span, width, gap: Modulator-plane geometry in meters
        envelope: Gain profile across the band
        dispersion_coefficient: kappa in theta_c = kappa * detuning^2
        bandwidth: Band in meters of wavelength, overrides the preset
        bandwidth_preset: "main" (150 nm) or "supplement" (100 nm)

    Returns:
        ChannelGrid
    """
    fit = capacity(span, width, gap)
    n = fit if n_channels is None else int(n_channels)
    if n < 1:
        raise PhysicsRangeError(f"need at least one channel, got {n}")
    if n > fit:
        raise PhysicsRangeError(f"{n} channels requested but only {fit} fit without overlap")
    if bandwidth is None:
        if bandwidth_preset not in BANDWIDTH_PRESETS:
            raise PhysicsRangeError(f"unknown bandwidth preset {bandwidth_preset!r}")
        bandwidth = BANDWIDTH_PRESETS[bandwidth_preset]
    half_band = bandwidth_to_angular(bandwidth) / 2
    detunings = tuple((c + 0.5) * half_band / n for c in range(n))
    envelope = GainEnvelope(envelope)
    if envelope is GainEnvelope.FLAT:
        gains = tuple(float(gain) for _ in detunings)
    else:
        gains = tuple(float(gain) * math.cos(0.5 * math.pi * w / half_band) ** 2 for w in detunings)
    dispersion = tuple(dispersion_coefficient * w ** 2 for w in detunings)
    dbg(f"Griglia: {n} canali, banda {bandwidth * 1e9:.0f} nm, inviluppo {envelope.value}")
    return ChannelGrid(detunings, gains, dispersion, width, gap, span, bandwidth)


def dispersion_compensate(grid: ChannelGrid, measured_phases: Sequence[float],
                          intra_coefficient: Optional[float] = None,
                          points: int = DISPERSION_BAND_POINTS) -> ChannelGrid:
    """
    Subtract calibration phases from the channel offsets.

    What cannot be removed is the phase variation inside each channel band;
    its effect is reported as the contrast multiplier |<e^{i theta(w)}>| over
    the band, using theta(w) = kappa w^2 with kappa inferred from the grid
    unless given.
    """
    phases = np.asarray(measured_phases, dtype=float)
    if phases.shape != (grid.n_channels,):
        raise PhysicsRangeError(
            f"expected {grid.n_channels} calibration phases, got {phases.shape}")
    corrected = tuple(float(d - p) for d, p in zip(grid.dispersion, phases))
    kappa = intra_coefficient
    if kappa is None:
        w0 = grid.detunings[0]
        kappa = grid.dispersion[0] / w0 ** 2 if w0 else 0.0
    half = grid.channel_band / 2
    multipliers = []
    for w in grid.detunings:
        band = np.linspace(w - half, w + half, points)
        theta = kappa * (band ** 2 - w ** 2)
        multipliers.append(float(abs(np.mean(np.exp(1j * theta)))))
    return replace(grid, dispersion=corrected, contrast_multipliers=tuple(multipliers))


@dataclass(frozen=True, eq=False)
class CrosstalkModel:
    """Row-stochastic leakage matrix between channels."""

    matrix: np.ndarray
    mode: CrosstalkMode = CrosstalkMode.INTENSITY

    def __post_init__(self):
        m = np.array(self.matrix, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise PhysicsRangeError(f"leakage matrix must be square, got shape {m.shape}")
        if np.any(m < 0):
            raise PhysicsRangeError("leakage matrix has negative entries")
        if np.any(np.abs(m.sum(axis=1) - 1) > ROW_SUM_TOL):
            raise PhysicsRangeError("leakage matrix rows must sum to 1")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "mode", CrosstalkMode(self.mode))

    @classmethod
    def tridiagonal(cls, n: int, leak_left: float = 0.0, leak_right: float = 0.0,
                    mode: CrosstalkMode = CrosstalkMode.INTENSITY) -> "CrosstalkModel":
        """L[i, i-1] = leak_left, L[i, i+1] = leak_right, diagonal fills the row to 1."""
        if leak_left < 0 or leak_right < 0 or leak_left + leak_right > 1:
            raise PhysicsRangeError(f"invalid leakage ({leak_left}, {leak_right})")
        m = np.zeros((n, n))
        for i in range(n):
            if i > 0:
                m[i, i - 1] = leak_left
            if i < n - 1:
                m[i, i + 1] = leak_right
            m[i, i] = 1.0 - m[i].sum()
        return cls(m, mode)

    @classmethod
    def identity(cls, n: int) -> "CrosstalkModel":
        return cls(np.eye(n))

    @property
    def n_channels(self) -> int:
        return self.matrix.shape[0]

    @property
    def is_identity(self) -> bool:
        return bool(np.array_equal(self.matrix, np.eye(self.n_channels)))


def apply_crosstalk(model: CrosstalkModel, intensities: np.ndarray) -> np.ndarray:
    """
    Measured intensities after leakage, I~ = L I.

    `intensities` may carry extra trailing axes (e.g. one column per bit).
    """
    arr = np.asarray(intensities, dtype=float)
    if arr.shape[0] != model.n_channels:
        raise PhysicsRangeError(
            f"dimension mismatch: {arr.shape[0]} intensities for {model.n_channels} channels")
    if np.any(arr < 0):
        raise PhysicsRangeError("intensities must be non-negative")
    return np.tensordot(model.matrix, arr, axes=1)


def blur_factors(model: CrosstalkModel, phases: np.ndarray) -> np.ndarray:
    """
    Complex factor multiplying each channel's interference term when the
    phase modulation, rather than the light, leaks: z_c = sum_j L_cj e^{i(psi_j - psi_c)}.
    """
    psi = np.asarray(phases, dtype=float)
    if psi.shape[0] != model.n_channels:
        raise PhysicsRangeError(
            f"dimension mismatch: {psi.shape[0]} phases for {model.n_channels} channels")
    e = np.exp(1j * psi)
    return np.tensordot(model.matrix, e, axes=1) * np.conj(e)


def crosstalk_error_metric(intensity: np.ndarray) -> np.ndarray:
    """
    Err_1(phi_2) = < I_1(phi_1, phi_2) - <I_1>_{phi_2} >_{phi_1}.

    Args:
        intensity: I_1 sampled on the full grid, shape (n_phi1, n_phi2) or
            (repeats, n_phi1, n_phi2)

    Returns:
        Error curve over phi_2, shape (n_phi2,); with repeats, an array of
        shape (2, n_phi2) holding mean and standard deviation
    """
    arr = np.asarray(intensity, dtype=float)
    if arr.ndim not in (2, 3) or 0 in arr.shape or np.any(~np.isfinite(arr)):
        raise PhysicsRangeError("incomplete (phi_1, phi_2) grid")
    dev = arr - arr.mean(axis=-1, keepdims=True)
    err = dev.mean(axis=-2)
    if arr.ndim == 2:
        return err
    sigma = err.std(axis=0, ddof=1) if err.shape[0] > 1 else np.zeros(err.shape[1])
    return np.stack([err.mean(axis=0), sigma])


def sample_neighbour_grid(model: CrosstalkModel, phi_grid: Sequence[float],
                          rng: np.random.Generator, repeats: int = 1,
                          counts_scale: float = 0.0, channel: int = 0) -> np.ndarray:
    """
    Intensity of one of the first two channels of `model` over a phase grid.

    Axis -2 is the channel's own phase, axis -1 its neighbour's, so channel 0
    gives I_1(phi_1, phi_2) and channel 1 gives I_2(phi_2, phi_1). Each
    channel interferes as 1 + cos(phi); the leak then mixes them. With
    counts_scale > 0 the intensities are replaced by Poisson counts of that
    mean scale divided back, which adds shot noise to the curve.
    """
    if model.n_channels < 2:
        raise PhysicsRangeError("the neighbour grid needs at least two channels")
    if channel not in (0, 1):
        raise PhysicsRangeError(f"channel must be 0 or 1, got {channel}")
    other = 1 - channel
    phis = np.asarray(phi_grid, dtype=float)
    own, neighbour = np.meshgrid(phis, phis, indexing="ij")
    rows = []
    for _ in range(repeats):
        if model.mode is CrosstalkMode.INTENSITY:
            base = np.zeros((model.n_channels,) + own.shape)
            base[channel] = 1 + np.cos(own)
            base[other] = 1 + np.cos(neighbour)
            measured = apply_crosstalk(model, base)[channel]
        else:
            psi = np.zeros((model.n_channels,) + own.shape)
            psi[channel], psi[other] = own, neighbour
            measured = 1 + np.real(blur_factors(model, psi)[channel] * np.exp(1j * own))
        if counts_scale > 0:
            measured = rng.poisson(measured * counts_scale) / counts_scale
        rows.append(measured)
    return np.array(rows)
