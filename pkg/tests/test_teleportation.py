"""
tests/test_teleportation.py
Heisenberg-picture teleportation: exact cancellation, noise, Monte Carlo.
"""

import math

import numpy as np
import pytest
import sympy

from protocols.teleportation import (
    LinearQuadratureOperator, Orientation, Quadrature, SourceMode, SqueezeSettings,
    added_noise_variance, input_operator, mix_on_beamsplitter, squeezed_source,
    teleport_monte_carlo, teleport_multiplexed, teleport_stages, teleport_symbolic,
)
from utils.errors import PhysicsRangeError

OPA1_X = (SourceMode.OPA1, Quadrature.X)


class TestOperators:

    def test_add_then_subtract(self) -> None:
        a = squeezed_source(0.5, Orientation.X_STRETCHED)
        b = squeezed_source(0.5, Orientation.Y_STRETCHED)
        assert ((a + b) - b - a).is_zero(tol=1e-15)

    def test_squeezed_source_orientation(self) -> None:
        a = squeezed_source(1.0, Orientation.X_STRETCHED)
        assert a.x_coefficient(SourceMode.OPA1) == pytest.approx(math.sqrt(2) * math.e)
        assert a.y_coefficient(SourceMode.OPA1) == pytest.approx(math.sqrt(2) / math.e)
        b = squeezed_source(1.0, Orientation.Y_STRETCHED)
        assert b.x_coefficient(SourceMode.OPA2) == pytest.approx(math.sqrt(2) / math.e)
        assert b.y_coefficient(SourceMode.OPA2) == pytest.approx(math.sqrt(2) * math.e)

    def test_beamsplitter_preserves_weights(self) -> None:
        a, b = input_operator(1.0, 1.0), squeezed_source(0.3, Orientation.X_STRETCHED)
        c, d = mix_on_beamsplitter(a, b)
        for key in (OPA1_X, (SourceMode.INPUT, Quadrature.X)):
            before = a.x.get(key, 0) ** 2 + b.x.get(key, 0) ** 2
            after = c.x.get(key, 0) ** 2 + d.x.get(key, 0) ** 2
            assert after == pytest.approx(before)

    def test_unknown_symbol_rejected(self) -> None:
        with pytest.raises(PhysicsRangeError):
            LinearQuadratureOperator({("bad", Quadrature.X): 1.0})

    def test_negative_gain_rejected(self) -> None:
        with pytest.raises(PhysicsRangeError):
            squeezed_source(-0.1, Orientation.X_STRETCHED)
        with pytest.raises(PhysicsRangeError):
            SqueezeSettings(-0.1)


class TestExactPipeline:

    @pytest.mark.parametrize("g", [0.0, 0.5, 1.0, 2.0])
    def test_stretched_terms_cancel(self, g: float) -> None:
        s = SqueezeSettings(g)
        out = teleport_stages(1.0, 1.0, s).a8
        t, res = s.t, 2 * s.t * math.exp(-g)
        assert out.x_coefficient(SourceMode.OPA1) == pytest.approx(0.0, abs=1e-9)
        assert out.y_coefficient(SourceMode.OPA2) == pytest.approx(0.0, abs=1e-9)
        assert out.x_coefficient(SourceMode.OPA2) == pytest.approx(res)
        assert out.y_coefficient(SourceMode.OPA1) == pytest.approx(res)
        assert out.x_coefficient(SourceMode.INPUT) == pytest.approx(t)
        assert out.y_coefficient(SourceMode.INPUT) == pytest.approx(t)

    def test_input_amplitudes_carried(self) -> None:
        out = teleport_symbolic(0.3, -0.7, SqueezeSettings(1.0, t=0.8))
        assert out.x_coefficient(SourceMode.INPUT) == pytest.approx(0.8 * 0.3)
        assert out.y_coefficient(SourceMode.INPUT) == pytest.approx(0.8 * -0.7)

    def test_symbolic_cancellation(self) -> None:
        g, t = sympy.symbols("g t", positive=True)
        xi, eta = sympy.symbols("xi eta")
        out = teleport_symbolic(xi, eta, SqueezeSettings(g, t))
        assert sympy.simplify(out.x_coefficient(SourceMode.OPA1)) == 0
        assert sympy.simplify(out.y_coefficient(SourceMode.OPA2)) == 0
        assert sympy.simplify(out.x_coefficient(SourceMode.OPA2) - 2 * t * sympy.exp(-g)) == 0
        assert sympy.simplify(out.y_coefficient(SourceMode.OPA1) - 2 * t * sympy.exp(-g)) == 0
        assert sympy.simplify(out.x_coefficient(SourceMode.INPUT) - t * xi) == 0

    def test_unit_transmission_rejected(self) -> None:
        with pytest.raises(PhysicsRangeError):
            teleport_stages(1.0, 1.0, SqueezeSettings(1.0, t=1.0))

    def test_transmission_range(self) -> None:
        with pytest.raises(PhysicsRangeError):
            SqueezeSettings(1.0, t=0.0)


class TestAddedNoise:

    def test_values(self) -> None:
        assert added_noise_variance(0.0) == 1.0
        assert added_noise_variance(1.0) == pytest.approx(math.exp(-2))

    def test_monotone(self) -> None:
        values = [added_noise_variance(g) for g in np.linspace(0, 3, 13)]
        assert all(b < a for a, b in zip(values, values[1:]))

    def test_negative_rejected(self) -> None:
        with pytest.raises(PhysicsRangeError):
            added_noise_variance(-1.0)


class TestMonteCarlo:

    def test_added_variance(self) -> None:
        s = SqueezeSettings(1.0)
        stats = teleport_monte_carlo((1.0, -0.5), s, 200_000, np.random.default_rng(4))
        t2 = s.t ** 2
        expected = t2 * (0.25 + math.exp(-2)) - 0.25
        assert stats.added_variance == pytest.approx([expected, expected], abs=0.005)

    @pytest.mark.parametrize("g", [0.0, 0.5, 1.0, 2.0])
    def test_added_noise_within_five_percent(self, g: float) -> None:
        s = SqueezeSettings(g)
        stats = teleport_monte_carlo((0.5, 0.5), s, 100_000, np.random.default_rng(int(10 * g) + 21))
        assert stats.residual_variance == pytest.approx([added_noise_variance(g)] * 2, rel=0.05)

    @pytest.mark.parametrize("g", [0.0, 0.5, 1.0, 2.0])
    def test_output_minus_input_variance_within_five_percent(self, g: float) -> None:
        stats = teleport_monte_carlo((0.0, 0.0), SqueezeSettings(g), 1_000_000,
                                     np.random.default_rng(int(10 * g) + 41))
        assert stats.added_variance == pytest.approx([added_noise_variance(g)] * 2, rel=0.05)

    def test_mean_carried(self) -> None:
        s = SqueezeSettings(1.5)
        stats = teleport_monte_carlo((1.0, -0.5), s, 100_000, np.random.default_rng(5))
        for k, m in enumerate((1.0, -0.5)):
            assert abs(stats.mean_out[k] - s.t * m) < 5 * stats.mean_sem[k]

    def test_deterministic(self) -> None:
        s = SqueezeSettings(1.0)
        a = teleport_monte_carlo((0.0, 0.0), s, 1000, np.random.default_rng(9))
        b = teleport_monte_carlo((0.0, 0.0), s, 1000, np.random.default_rng(9))
        assert np.array_equal(a.cov_out, b.cov_out)

    def test_guards(self) -> None:
        rng = np.random.default_rng(0)
        with pytest.raises(PhysicsRangeError):
            teleport_monte_carlo((0, 0), SqueezeSettings(1.0), 0, rng)
        with pytest.raises(PhysicsRangeError):
            teleport_monte_carlo((0, 0), SqueezeSettings(sympy.Symbol("g")), 10, rng)
        with pytest.raises(PhysicsRangeError):
            teleport_monte_carlo((0, 0), SqueezeSettings(1.0), 10, rng, cov=np.array([[1.0, 2.0], [2.0, 1.0]]))


class TestMultiplexed:

    def test_channels_uncorrelated(self) -> None:
        settings = [SqueezeSettings(g) for g in (0.5, 1.0, 1.5)]
        rngs = [np.random.default_rng(100 + k) for k in range(3)]
        stats = teleport_multiplexed(settings, (0.5, 0.5), 50_000, rngs)
        assert len(stats.channels) == 3
        assert stats.cross_covariance.shape == (6, 6)
        assert stats.max_cross_correlation < 0.03

    def test_per_channel_noise_follows_gain(self) -> None:
        settings = [SqueezeSettings(g) for g in (0.5, 2.0)]
        rngs = [np.random.default_rng(k) for k in range(2)]
        stats = teleport_multiplexed(settings, (0.0, 0.0), 50_000, rngs)
        assert stats.channels[1].added_variance[0] < stats.channels[0].added_variance[0]

    def test_one_generator_per_channel(self) -> None:
        with pytest.raises(PhysicsRangeError):
            teleport_multiplexed([SqueezeSettings(1.0)] * 2, (0, 0), 10, [np.random.default_rng(0)])
