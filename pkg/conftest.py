"""Shared pytest setup: repository root on sys.path and small session fixtures."""

import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).resolve().parent))

from core.quantum_core import ComplexGain  # noqa: E402
from protocols.qkd import SessionConfig  # noqa: E402


@pytest.fixture
def gain():
    return ComplexGain(0.1)


@pytest.fixture
def small_session():
    return SessionConfig(channels=2, gains=ComplexGain(0.1), slots_per_window=100,
                         bits_per_channel=2000, master_seed=7)
