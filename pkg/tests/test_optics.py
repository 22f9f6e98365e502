"""
tests/test_optics.py
Pulse-shaper design calculator.
"""

import math

import pytest

from config.constants import MODULATOR_SPAN, PUMP_WAVELENGTH, SPEED_OF_LIGHT
from spectral.optics import OpticsDesign, design_optics, focal_length
from utils.errors import PhysicsRangeError

OMEGA_P = 2 * math.pi * SPEED_OF_LIGHT / PUMP_WAVELENGTH


def design(**kw) -> OpticsDesign:
    args = dict(d_pixel=8e-6, aperture=5e-3, wavelength=1560e-9, span=MODULATOR_SPAN,
                omega=0.05 * OMEGA_P, omega_pump=OMEGA_P)
    args.update(kw)
    return design_optics(**args)


class TestDesign:

    def test_focal_length(self) -> None:
        assert focal_length(8e-6, 5e-3, 1560e-9) == pytest.approx(0.4 * 8e-6 * 5e-3 / 1560e-9)

    def test_design_values(self) -> None:
        d = design()
        assert d.f_lens == pytest.approx(focal_length(8e-6, 5e-3, 1560e-9))
        assert d.grating_period > 0
        assert d.capacity == 23
        assert set(d.to_dict()) == {"f_lens", "grating_period", "capacity"}

    def test_period_grows_with_detuning(self) -> None:
        assert design(omega=0.1 * OMEGA_P).grating_period > design().grating_period

    def test_aperture_must_exceed_span(self) -> None:
        with pytest.raises(PhysicsRangeError, match="aperture"):
            design(aperture=MODULATOR_SPAN)

    def test_detuning_limit(self) -> None:
        with pytest.raises(PhysicsRangeError, match="invalid detuning"):
            design(omega=OMEGA_P / 2)

    def test_degenerate_detuning_accepted(self) -> None:
        d = design(omega=0.0)
        assert d.grating_period == 0.0
        assert d.f_lens == pytest.approx(design().f_lens)

    def test_negative_detuning_rejected(self) -> None:
        with pytest.raises(PhysicsRangeError, match="non-negative"):
            design(omega=-0.01 * OMEGA_P)
        with pytest.raises(PhysicsRangeError, match="pump"):
            design(omega_pump=0.0)

    @pytest.mark.parametrize("field", ["d_pixel", "wavelength", "span"])
    def test_non_positive(self, field: str) -> None:
        with pytest.raises(PhysicsRangeError):
            design(**{field: 0.0})
