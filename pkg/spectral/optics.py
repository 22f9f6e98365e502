"""
Pulse-shaper design calculator.

Given the modulator pixel, the beam aperture and the band, gives the lens
focal length, the grating period that spreads the band over the modulator
span, and how many channels fit.
"""

import math
from dataclasses import asdict, dataclass
from typing import Dict

from config.constants import CHANNEL_GAP, CHANNEL_WIDTH, SPEED_OF_LIGHT
from spectral.channels import capacity
from utils.errors import PhysicsRangeError


@dataclass(frozen=True)
class OpticsDesign:
    f_lens: float
    grating_period: float
    capacity: int

    def to_dict(self) -> Dict[str, float]:
        return asdict(self)


def focal_length(d_pixel: float, aperture: float, wavelength: float) -> float:
    """f = 0.4 d_pixel D / lambda."""
    return 0.4 * d_pixel * aperture / wavelength


def design_optics(d_pixel: float, aperture: float, wavelength: float, span: float,
                  omega: float, omega_pump: float,
                  width: float = CHANNEL_WIDTH, gap: float = CHANNEL_GAP) -> OpticsDesign:
    """
    Args:
        d_pixel: Modulator pixel size (m)
        aperture: Beam diameter D on the grating (m), must exceed the span
        wavelength: Center wavelength (m)
        span: Modulator span L (m)
        omega: Largest detuning from half the pump frequency (rad/s); 0 is the
            degenerate limit and gives a zero grating period
        omega_pump: Pump angular frequency (rad/s)

    Returns:
        OpticsDesign
    """
    for name, value in (("d_pixel", d_pixel), ("aperture", aperture),
                        ("wavelength", wavelength), ("span", span)):
        if not value > 0:
            raise PhysicsRangeError(f"{name} must be positive, got {value}")
    if aperture <= span:
        raise PhysicsRangeError(
            f"aperture {aperture} m must exceed the span {span} m to capture the full spectrum")
    if omega < 0:
        raise PhysicsRangeError(f"detuning must be non-negative, got {omega}")
    if omega_pump <= 0:
        raise PhysicsRangeError(f"pump angular frequency must be positive, got {omega_pump}")
    if omega >= omega_pump / 2:
        raise PhysicsRangeError(
            f"invalid detuning: omega {omega:.4g} must stay below omega_p/2 = {omega_pump / 2:.4g}")
    f = focal_length(d_pixel, aperture, wavelength)
    period = (f / span) * 4 * omega * math.pi * SPEED_OF_LIGHT / (omega_pump ** 2 / 4 - omega ** 2)
    return OpticsDesign(f, period, capacity(span, width, gap))
