"""
models.experiment_config module.

This module contains the experiment configuration loader:
- Built-in defaults merged under the user's JSON file
- Unknown keys rejected at every level
- Builders for the session, attack, grid and teleportation settings
"""

import copy
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from config.constants import (
    BANDWIDTH_PRESETS, CENTER_WAVELENGTH, CHANNEL_GAP, CHANNEL_WIDTH,
    CONFIG_SCHEMA_VERSION, DEFAULT_BANDWIDTH_PRESET, DEFAULT_BITS_PER_CHANNEL,
    DEFAULT_DARK_COUNT, DEFAULT_DETECTOR_EFFICIENCY, DEFAULT_MASTER_SEED,
    DEFAULT_SLOTS_PER_WINDOW, DEFAULT_TELEPORT_T, MODULATOR_SPAN,
    PUMP_WAVELENGTH, SPEED_OF_LIGHT, STEAL_RESEND_FIGURE_GAIN,
)
from core.quantum_core import BeamsplitterConvention, ComplexGain
from protocols.adversary import AttackKind, AttackModel, OutcomeWeights
from protocols.qkd import Mode, SessionConfig
from protocols.teleportation import SqueezeSettings
from spectral.channels import ChannelGrid, CrosstalkMode, CrosstalkModel, GainEnvelope, build_grid
from utils.errors import ConfigError, MqpError
from utils.logger import dbg

COMMANDS = ("run-qkd", "attack-sweep", "run-teleport", "design-setup", "crosstalk-test", "validate")

DEFAULT_CONFIG: Dict[str, Any] = {
    "schema": CONFIG_SCHEMA_VERSION,
    "command": "run-qkd",
    "seed": DEFAULT_MASTER_SEED,
    "mode": Mode.SAMPLED.value,
    "out": "results",
    "workers": 1,
    "session": {
        "channels": 1,
        "gain": 0.1,
        "gain_phase": 0.0,
        "slots_per_window": DEFAULT_SLOTS_PER_WINDOW,
        "detector_efficiency": DEFAULT_DETECTOR_EFFICIENCY,
        "dark_count": DEFAULT_DARK_COUNT,
        "bits_per_channel": DEFAULT_BITS_PER_CHANNEL,
        "transmission": 1.0,
        "bob_gain_ratio": 1.0,
        "window1_bit": 1,
        "reveal_fraction": 1.0,
        "use_grid": False,
    },
    "attack": {
        "kind": AttackKind.NONE.value,
        "reflectance": None,
        "idealized": True,
        "convention": BeamsplitterConvention.REAL_ASYMMETRIC.value,
        "outcome_weights": OutcomeWeights.TABULATED.value,
    },
    "sweep": {
        "attack": AttackKind.STEAL.value,
        "t_grid": {"start": 0.0, "stop": 1.0, "step": 0.05},
        "gain": STEAL_RESEND_FIGURE_GAIN,
    },
    "teleport": {
        "g_grid": [0.0, 0.5, 1.0, 1.5, 2.0],
        "t": DEFAULT_TELEPORT_T,
        "samples": 100_000,
        "mean": [1.0, 0.0],
        "channels": 1,
    },
    "grid": {
        "channels": None,
        "span": MODULATOR_SPAN,
        "width": CHANNEL_WIDTH,
        "gap": CHANNEL_GAP,
        "envelope": GainEnvelope.FLAT.value,
        "dispersion_coefficient": 0.0,
        "bandwidth_preset": DEFAULT_BANDWIDTH_PRESET,
    },
    "crosstalk": {
        "leak_left": 0.0,
        "leak_right": 0.0,
        "mode": CrosstalkMode.INTENSITY.value,
        "enabled": False,
        "leak_grid": [0.0, 0.01, 0.05, 0.1],
        "phase_points": 16,
        "repeats": 8,
        "counts_scale": 0.0,
    },
    "optics": {
        "pixel": 10e-6,
        "aperture": 10e-3,
        "wavelength": 1.56e-6,
        "span": MODULATOR_SPAN,
        "omega": None,
        "omega_pump": None,
    },
}

# Sections whose values are free-form (no nested key checking)
_LEAF_DICTS = {"sweep.t_grid"}


def _merge(defaults: Mapping[str, Any], loaded: Mapping[str, Any], path: str = "") -> Dict[str, Any]:
    """Overlay loaded keys on defaults, one level at a time, rejecting unknown ones."""
    merged = {**defaults}
    for key, value in loaded.items():
        where = f"{path}.{key}" if path else key
        if key not in defaults:
            raise ConfigError(f"unknown key '{key}'", field=where)
        if isinstance(defaults[key], dict) and where not in _LEAF_DICTS:
            if not isinstance(value, dict):
                raise ConfigError("expected an object", field=where)
            merged[key] = _merge(defaults[key], value, where)
        else:
            merged[key] = value
    return merged


def expand_grid(spec: Union[Sequence[float], Mapping[str, float]], field: str) -> List[float]:
    """A list as given, or {start, stop, step} expanded inclusively."""
    if isinstance(spec, Mapping):
        try:
            start, stop, step = float(spec["start"]), float(spec["stop"]), float(spec["step"])
        except (KeyError, TypeError, ValueError) as e:
            raise ConfigError(f"grid needs numeric start, stop, step ({e})", field=field)
        if step <= 0 or stop < start:
            raise ConfigError("grid needs step > 0 and stop >= start", field=field)
        n = int(math.floor((stop - start) / step + 1e-9)) + 1
        return [round(start + i * step, 12) for i in range(n)]
    if isinstance(spec, (list, tuple)) and spec:
        try:
            return [float(v) for v in spec]
        except (TypeError, ValueError):
            raise ConfigError("grid values must be numbers", field=field)
    raise ConfigError("grid must be a non-empty list or a {start, stop, step} object", field=field)


@dataclass
class ExperimentConfig:
    """Validated configuration of one CLI run."""

    data: Dict[str, Any]

    @property
    def command(self) -> str:
        return self.data["command"]

    @property
    def seed(self) -> int:
        return int(self.data["seed"])

    @property
    def mode(self) -> Mode:
        return Mode(self.data["mode"])

    @property
    def out(self) -> Path:
        return Path(self.data["out"])

    @property
    def workers(self) -> int:
        return int(self.data["workers"])

    def section(self, name: str) -> Dict[str, Any]:
        return self.data[name]

    def attack_model(self, kind: Optional[str] = None,
                     reflectance: Optional[float] = None) -> AttackModel:
        a = self.data["attack"]
        kind = AttackKind(kind or a["kind"])
        convention = BeamsplitterConvention(a["convention"])
        if kind is AttackKind.NONE:
            return AttackModel.none()
        if kind is AttackKind.INTERCEPT_RESEND:
            return AttackModel.intercept_resend(bool(a["idealized"]))
        r = a["reflectance"] if reflectance is None else reflectance
        return AttackModel(kind, r, bool(a["idealized"]), convention,
                           OutcomeWeights(a["outcome_weights"]))

    def grid(self) -> ChannelGrid:
        g = self.data["grid"]
        return build_grid(g["channels"], self.data["session"]["gain"], g["span"], g["width"],
                          g["gap"], GainEnvelope(g["envelope"]), g["dispersion_coefficient"],
                          bandwidth_preset=g["bandwidth_preset"])

    def leak_pair(self, leak: Optional[float] = None) -> Tuple[float, float]:
        """
        (left, right) leakage. A sweep value `leak` is the larger of the two
        and keeps the configured left/right ratio; equal when both are zero.
        """
        c = self.data["crosstalk"]
        left, right = float(c["leak_left"]), float(c["leak_right"])
        if leak is None:
            return left, right
        top = max(left, right)
        if top <= 0:
            return leak, leak
        return leak * left / top, leak * right / top

    def crosstalk_model(self, channels: int, leak: Optional[float] = None) -> Optional[CrosstalkModel]:
        c = self.data["crosstalk"]
        if leak is None and not c["enabled"]:
            return None
        left, right = self.leak_pair(leak)
        return CrosstalkModel.tridiagonal(channels, left, right, CrosstalkMode(c["mode"]))

    def session_config(self, seed: Optional[int] = None, gain: Optional[float] = None,
                       leak: Optional[float] = None) -> SessionConfig:
        s = self.data["session"]
        phase = float(s["gain_phase"])
        if s["use_grid"]:
            grid = self.grid()
            channels = grid.n_channels
            gains = tuple(ComplexGain(g, phase) for g in grid.gains)
            offsets = grid.dispersion
        else:
            channels = int(s["channels"])
            gains = ComplexGain(float(s["gain"] if gain is None else gain), phase)
            offsets = 0.0
        transmission = s["transmission"]
        if isinstance(transmission, list):
            transmission = tuple(float(t) for t in transmission)
        return SessionConfig(
            channels=channels, gains=gains,
            slots_per_window=int(s["slots_per_window"]),
            detector_efficiency=float(s["detector_efficiency"]),
            dark_count=float(s["dark_count"]),
            bits_per_channel=int(s["bits_per_channel"]),
            master_seed=self.seed if seed is None else seed,
            transmission=transmission, phase_offsets=offsets,
            bob_gain_ratio=float(s["bob_gain_ratio"]),
            window1_bit=int(s["window1_bit"]),
            reveal_fraction=float(s["reveal_fraction"]),
            crosstalk=self.crosstalk_model(channels, leak),
        )

    def t_grid(self) -> List[float]:
        return expand_grid(self.data["sweep"]["t_grid"], "sweep.t_grid")

    def g_grid(self) -> List[float]:
        return expand_grid(self.data["teleport"]["g_grid"], "teleport.g_grid")

    def squeeze_settings(self, g: float) -> SqueezeSettings:
        return SqueezeSettings(float(g), float(self.data["teleport"]["t"]))

    def optics_args(self) -> Dict[str, float]:
        o = self.data["optics"]
        omega_pump = o["omega_pump"]
        if omega_pump is None:
            omega_pump = 2 * math.pi * SPEED_OF_LIGHT / PUMP_WAVELENGTH
        omega = o["omega"]
        if omega is None:
            preset = BANDWIDTH_PRESETS[self.data["grid"]["bandwidth_preset"]]
            omega = math.pi * SPEED_OF_LIGHT * preset / CENTER_WAVELENGTH ** 2
        return {"d_pixel": float(o["pixel"]), "aperture": float(o["aperture"]),
                "wavelength": float(o["wavelength"]), "span": float(o["span"]),
                "omega": float(omega), "omega_pump": float(omega_pump)}

    def validate(self) -> "ExperimentConfig":
        """Build every sub-configuration once so semantic errors surface at load time."""
        if self.data.get("schema") != CONFIG_SCHEMA_VERSION:
            raise ConfigError(f"unsupported schema {self.data.get('schema')!r}", field="schema")
        if self.command not in COMMANDS:
            raise ConfigError(f"unknown command {self.command!r}", field="command")
        checks = (
            ("mode", lambda: self.mode),
            ("seed", lambda: self.seed),
            ("workers", self._check_workers),
            ("attack", self.attack_model),
            ("session", self.session_config),
            ("sweep.t_grid", self._check_t_grid),
            ("sweep.attack", lambda: AttackKind(self.data["sweep"]["attack"])),
            ("teleport.g_grid", self._check_g_grid),
            ("grid", self.grid),
        )
        for name, check in checks:
            try:
                check()
            except ConfigError:
                raise
            except (MqpError, ValueError, TypeError, KeyError) as e:
                raise ConfigError(str(e), field=name) from e
        return self

    def _check_workers(self):
        if self.workers < 1:
            raise ConfigError("workers must be at least 1", field="workers")

    def _check_t_grid(self):
        for t in self.t_grid():
            if not 0.0 <= t <= 1.0:
                raise ConfigError(f"transmission {t} out of [0, 1]", field="sweep.t_grid")

    def _check_g_grid(self):
        for g in self.g_grid():
            self.squeeze_settings(g)


def load_config(path: Optional[Union[str, Path]] = None,
                overrides: Optional[Mapping[str, Any]] = None) -> ExperimentConfig:
    """
    Read an experiment file, merge it over the defaults and validate it.

    Args:
        path: JSON file; None runs on defaults only
        overrides: Top-level keys applied after the file (CLI flags)

    Returns:
        Validated ExperimentConfig

    Raises:
        ConfigError: Syntax errors (with line/column), unknown keys, invalid values
    """
    loaded: Dict[str, Any] = {}
    if path is not None:
        p = Path(path)
        try:
            text = p.read_text(encoding="utf-8")
        except OSError as e:
            raise ConfigError(f"cannot read {p}: {e.strerror}")
        try:
            loaded = json.loads(text)
        except json.JSONDecodeError as e:
            raise ConfigError(f"invalid JSON: {e.msg}", line=e.lineno, column=e.colno)
        if not isinstance(loaded, dict):
            raise ConfigError("top level must be an object")
    merged = _merge(copy.deepcopy(DEFAULT_CONFIG), loaded)
    if overrides:
        merged = _merge(merged, {k: v for k, v in overrides.items() if v is not None})
    dbg(f"Configurazione caricata: comando {merged['command']}, seed {merged['seed']}")
    return ExperimentConfig(merged).validate()
