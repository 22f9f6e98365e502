"""
Configuration and constants for the multiplexed quantum protocol toolkit.

This module contains all application-wide constants including:
- Physical constants and optical presets
- Protocol defaults (coherence slots, detector model)
- Numerical tolerances for the oracle and the validate suite
- Report formatting
"""

import math

# Physical constants
SPEED_OF_LIGHT = 299_792_458.0  # m/s

# Optical presets
CENTER_WAVELENGTH = 1560e-9  # m
PUMP_WAVELENGTH = 780e-9  # m
BANDWIDTH_PRESETS = {
    "main": 150e-9,        # "~150nm bandwidth around 1560nm"
    "supplement": 100e-9,  # "~100nm bandwidth of SPDC"
}
DEFAULT_BANDWIDTH_PRESET = "main"

# Modulator geometry
CHANNEL_WIDTH = 130e-6  # m
CHANNEL_GAP = 30e-6  # m
MODULATOR_SPAN = 3.68e-3  # m, reproduces 23 channels at 160 um pitch
EXPERIMENT_CHANNELS = 23

# Gain guards
GAIN_WARN_THRESHOLD = 0.3
GAIN_MAX = 0.5

# QKD session defaults
DEFAULT_SLOTS_PER_WINDOW = 10_000
DEFAULT_DETECTOR_EFFICIENCY = 1.0
DEFAULT_DARK_COUNT = 0.0
DEFAULT_BITS_PER_CHANNEL = 1000
DEFAULT_MASTER_SEED = 20240917
RNG_BLOCK_BITS = 4096

# Experiment figures quoted by the loss-detection study
BASELINE_TRANSMISSION = 0.56
EXTRA_LOSS = 0.05
LOSS_DETECTION_TRIALS = 100_000
LOSS_DETECTION_SIGMAS = 3.0
STEAL_RESEND_FIGURE_GAIN = 0.2

# Fock oracle
FOCK_CUTOFF = 6
ORACLE_NORM_TOL = 1e-10
ORACLE_LEAKAGE_WARN = 1e-8
ORACLE_LEAKAGE_MAX = 1e-6

# Teleportation
VACUUM_QUADRATURE_VARIANCE = 0.25
DEFAULT_TELEPORT_T = 0.9999

# Dispersion residual sampling
DISPERSION_BAND_POINTS = 257

# Reports
CSV_SIGNIFICANT_DIGITS = 12
CONFIG_SCHEMA_VERSION = 1

APP_TITLE = "Multiplexed Quantum Protocols"
APP_VERSION = "1.0"

TWO_PI = 2.0 * math.pi
