"""
protocols.teleportation module.

This module contains the multiplexed continuous-variable teleportation
pipeline in the linearized Heisenberg picture:
- Field operators as linear combinations of source quadratures
- Exact (numeric or sympy) propagation through the five steps
- Gaussian Monte Carlo of the same pipeline, per channel or multiplexed
"""

import math
from dataclasses import dataclass, field
from enum import Enum
from types import MappingProxyType
from typing import Dict, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
import sympy

from config.constants import DEFAULT_TELEPORT_T, VACUUM_QUADRATURE_VARIANCE
from utils.errors import PhysicsRangeError
from utils.logger import dbg

Coefficient = Union[float, complex, sympy.Expr]


class SourceMode(Enum):
    INPUT = "Input"
    OPA1 = "OPA1"
    OPA2 = "OPA2"


class Quadrature(Enum):
    X = "x"
    Y = "y"


Symbol = Tuple[SourceMode, Quadrature]
ALL_SYMBOLS = tuple((m, q) for m in SourceMode for q in Quadrature)


class Orientation(Enum):
    X_STRETCHED = "x-stretched"
    Y_STRETCHED = "y-stretched"


def _is_symbolic(*values) -> bool:
    return any(isinstance(v, sympy.Basic) for v in values)


def _exp(v):
    return sympy.exp(v) if _is_symbolic(v) else math.exp(v)


def _sqrt(v, symbolic: bool = False):
    return sympy.sqrt(v) if symbolic or _is_symbolic(v) else math.sqrt(v)


def _combine(a: Mapping, b: Mapping, sb) -> Dict:
    out = dict(a)
    for k, v in b.items():
        out[k] = out.get(k, 0) + sb * v
    return out


@dataclass(frozen=True)
class LinearQuadratureOperator:
    """
    a = sum_k x_k s_k x^ + i sum_k y_k s_k y^dagger + displacement.

    `x` and `y` map source symbols (mode, quadrature) to coefficients, which
    may be plain numbers or sympy expressions.
    """

    x: Mapping[Symbol, Coefficient] = field(default_factory=dict)
    y: Mapping[Symbol, Coefficient] = field(default_factory=dict)
    displacement: Coefficient = 0

    def __post_init__(self):
        for part in (self.x, self.y):
            for key, value in part.items():
                if key not in ALL_SYMBOLS:
                    raise PhysicsRangeError(f"unknown quadrature symbol {key}")
                if not _is_symbolic(value) and not np.isfinite(value):
                    raise PhysicsRangeError(f"non-finite coefficient for {key}")
        object.__setattr__(self, "x", MappingProxyType(dict(self.x)))
        object.__setattr__(self, "y", MappingProxyType(dict(self.y)))

    def __add__(self, other: "LinearQuadratureOperator") -> "LinearQuadratureOperator":
        return LinearQuadratureOperator(_combine(self.x, other.x, 1), _combine(self.y, other.y, 1),
                                        self.displacement + other.displacement)

    def __sub__(self, other: "LinearQuadratureOperator") -> "LinearQuadratureOperator":
        return LinearQuadratureOperator(_combine(self.x, other.x, -1), _combine(self.y, other.y, -1),
                                        self.displacement - other.displacement)

    def __mul__(self, scalar: Coefficient) -> "LinearQuadratureOperator":
        return LinearQuadratureOperator({k: scalar * v for k, v in self.x.items()},
                                        {k: scalar * v for k, v in self.y.items()},
                                        scalar * self.displacement)

    __rmul__ = __mul__

    def __truediv__(self, scalar: Coefficient) -> "LinearQuadratureOperator":
        return self * (1 / scalar)

    def x_coefficient(self, mode: SourceMode, quadrature: Quadrature = Quadrature.X) -> Coefficient:
        return self.x.get((mode, quadrature), 0)

    def y_coefficient(self, mode: SourceMode, quadrature: Quadrature = Quadrature.Y) -> Coefficient:
        return self.y.get((mode, quadrature), 0)

    def simplify(self) -> "LinearQuadratureOperator":
        def s(v):
            return sympy.simplify(v) if _is_symbolic(v) else v
        return LinearQuadratureOperator({k: s(v) for k, v in self.x.items()},
                                        {k: s(v) for k, v in self.y.items()},
                                        s(self.displacement))

    def is_zero(self, tol: float = 0.0) -> bool:
        for v in list(self.x.values()) + list(self.y.values()) + [self.displacement]:
            if _is_symbolic(v):
                if sympy.simplify(v) != 0:
                    return False
            elif abs(v) > tol:
                return False
        return True

    def x_part(self) -> "LinearQuadratureOperator":
        return LinearQuadratureOperator(self.x, {})

    def y_part(self) -> "LinearQuadratureOperator":
        return LinearQuadratureOperator({}, self.y)

    def evaluate(self, values: Mapping[Symbol, np.ndarray]) -> Tuple[np.ndarray, np.ndarray]:
        """Classical values of the x^ and y^dagger components for sampled symbols."""
        def dot(part):
            total = 0.0
            for key, coeff in part.items():
                total = total + float(coeff) * np.asarray(values[key], dtype=float)
            return total
        d = complex(self.displacement)
        return dot(self.x) + d.real, dot(self.y) + d.imag


@dataclass(frozen=True)
class SqueezeSettings:
    """
    Squeezing gain and output beamsplitter of one channel.

    X = e^g stretches, y = e^{-g} squeezes; t is the transmission amplitude
    of the output beamsplitter and r = sqrt(1 - t^2).
    """

    g: Coefficient
    t: Coefficient = DEFAULT_TELEPORT_T

    def __post_init__(self):
        if not _is_symbolic(self.g) and self.g < 0:
            raise PhysicsRangeError(f"squeezing gain must be non-negative, got {self.g}")
        if not _is_symbolic(self.t) and not 0 < self.t <= 1:
            raise PhysicsRangeError(f"beamsplitter amplitude t out of range: {self.t}")

    @property
    def symbolic(self) -> bool:
        return _is_symbolic(self.g, self.t)

    @property
    def stretch(self) -> Coefficient:
        return _exp(self.g)

    @property
    def squeeze(self) -> Coefficient:
        return _exp(-self.g)

    @property
    def r(self) -> Coefficient:
        return _sqrt(1 - self.t ** 2, self.symbolic)

    @property
    def alpha(self) -> Coefficient:
        r = self.r
        if not self.symbolic and r == 0:
            raise PhysicsRangeError("alpha = t/r undefined: output beamsplitter has r = 0")
        return self.t / r


def input_operator(xi: Coefficient = 1, eta: Coefficient = 1) -> LinearQuadratureOperator:
    return LinearQuadratureOperator({(SourceMode.INPUT, Quadrature.X): xi},
                                    {(SourceMode.INPUT, Quadrature.Y): eta})


def squeezed_source(g: Coefficient, orientation: Orientation,
                    mode: Optional[SourceMode] = None) -> LinearQuadratureOperator:
    """
    sqrt(2)(e^g x^ + i e^{-g} y^dagger) or its orientation swap, over the
    source's own symbols (OPA1 for x-stretched, OPA2 for y-stretched by default).
    """
    if not _is_symbolic(g) and g < 0:
        raise PhysicsRangeError(f"squeezing gain must be non-negative, got {g}")
    orientation = Orientation(orientation)
    if mode is None:
        mode = SourceMode.OPA1 if orientation is Orientation.X_STRETCHED else SourceMode.OPA2
    root2 = _sqrt(2, _is_symbolic(g))
    big, small = _exp(g), _exp(-g)
    cx, cy = (big, small) if orientation is Orientation.X_STRETCHED else (small, big)
    return LinearQuadratureOperator({(mode, Quadrature.X): root2 * cx},
                                    {(mode, Quadrature.Y): root2 * cy})


def mix_on_beamsplitter(a: LinearQuadratureOperator, b: LinearQuadratureOperator
                        ) -> Tuple[LinearQuadratureOperator, LinearQuadratureOperator]:
    """Balanced beamsplitter: ((a + b)/sqrt 2, (a - b)/sqrt 2)."""
    symbolic = any(_is_symbolic(v) for op in (a, b) for v in list(op.x.values()) + list(op.y.values()))
    root2 = _sqrt(2, symbolic)
    return (a + b) / root2, (a - b) / root2


@dataclass(frozen=True)
class TeleportStages:
    """Every intermediate operator of one teleportation run."""

    a1: LinearQuadratureOperator
    a2: LinearQuadratureOperator
    a3: LinearQuadratureOperator
    a4: LinearQuadratureOperator
    a5: LinearQuadratureOperator
    a6: LinearQuadratureOperator
    a7: LinearQuadratureOperator
    a8: LinearQuadratureOperator


def teleport_stages(xi: Coefficient, eta: Coefficient, settings: SqueezeSettings) -> TeleportStages:
    g = settings.g
    a1 = squeezed_source(g, Orientation.X_STRETCHED)
    a2 = squeezed_source(g, Orientation.Y_STRETCHED)
    a3, a4 = mix_on_beamsplitter(a1, a2)
    a_in = input_operator(xi, eta)
    plus, minus = mix_on_beamsplitter(a_in, a4)
    a5, a6 = minus, plus
    # Homodyne: x^ of a5 and y^dagger of a6 become classical numbers fed forward.
    root2 = _sqrt(2, settings.symbolic or _is_symbolic(xi, eta))
    a7 = (a5.x_part() + a6.y_part()) * (settings.alpha * root2)
    a8 = a3 * settings.t + a7 * settings.r
    return TeleportStages(a1, a2, a3, a4, a5, a6, a7, a8)


def teleport_symbolic(xi: Coefficient, eta: Coefficient,
                      settings: SqueezeSettings) -> LinearQuadratureOperator:
    """
    Output field of the full pipeline, no terms dropped.

    Equals t[(2x + xi) x^ + i(2y + eta) y^dagger] with x = e^{-g} OPA2.x and
    y = e^{-g} OPA1.y; the stretched quadratures cancel.

    Raises:
        PhysicsRangeError: r = 0
    """
    out = teleport_stages(xi, eta, settings).a8
    return out.simplify() if settings.symbolic or _is_symbolic(xi, eta) else out


def added_noise_variance(g: float) -> float:
    """Variance the squeezed residue adds to each output quadrature, e^{-2g}."""
    if g < 0:
        raise PhysicsRangeError(f"squeezing gain must be non-negative, got {g}")
    return math.exp(-2 * g)


@dataclass(frozen=True, eq=False)
class TeleportStats:
    mean_in: np.ndarray
    cov_in: np.ndarray
    mean_out: np.ndarray
    cov_out: np.ndarray
    n_samples: int
    residual_variance: Optional[np.ndarray] = None

    @property
    def added_variance(self) -> np.ndarray:
        return np.diag(self.cov_out) - np.diag(self.cov_in)

    @property
    def mean_sem(self) -> np.ndarray:
        return np.sqrt(np.diag(self.cov_out) / self.n_samples)


def _sample_symbols(mean: Sequence[float], cov: np.ndarray, n: int,
                    rng: np.random.Generator) -> Dict[Symbol, np.ndarray]:
    cov = np.asarray(cov, dtype=float)
    if cov.shape != (2, 2) or not np.allclose(cov, cov.T) or np.any(np.linalg.eigvalsh(cov) < -1e-15):
        raise PhysicsRangeError("input covariance must be a symmetric positive semidefinite 2x2 matrix")
    inp = rng.multivariate_normal(np.asarray(mean, dtype=float), cov, size=n)
    sd = math.sqrt(VACUUM_QUADRATURE_VARIANCE)
    values = {(SourceMode.INPUT, Quadrature.X): inp[:, 0], (SourceMode.INPUT, Quadrature.Y): inp[:, 1]}
    for mode in (SourceMode.OPA1, SourceMode.OPA2):
        for q in Quadrature:
            values[(mode, q)] = rng.normal(0.0, sd, n)
    return values


def _teleport_samples(settings: SqueezeSettings, mean, cov, n: int, rng: np.random.Generator):
    out = teleport_stages(1.0, 1.0, settings).a8
    values = _sample_symbols(mean, cov, n, rng)
    inp = np.column_stack([values[(SourceMode.INPUT, Quadrature.X)],
                           values[(SourceMode.INPUT, Quadrature.Y)]])
    ox, oy = out.evaluate(values)
    return inp, np.column_stack([ox, oy])


def _cov(a: np.ndarray) -> np.ndarray:
    return np.cov(a, rowvar=False, ddof=1) if a.shape[0] > 1 else np.zeros((a.shape[1], a.shape[1]))


def _stats(inp: np.ndarray, out: np.ndarray, settings: SqueezeSettings) -> TeleportStats:
    """Moments of one channel; the residual is what is left of a8 once t times the input is removed."""
    residual = out - float(settings.t) * inp
    return TeleportStats(inp.mean(axis=0), _cov(inp), out.mean(axis=0), _cov(out), inp.shape[0],
                         np.diag(_cov(residual)).copy())


def teleport_monte_carlo(mean: Sequence[float], settings: SqueezeSettings, n_samples: int,
                         rng: np.random.Generator,
                         cov: Optional[np.ndarray] = None) -> TeleportStats:
    """
    Sample the input and the four source quadratures (vacuum variance 1/4 each,
    e^{+-2g}/4 once stretched or squeezed) and push them through the pipeline.

    Args:
        mean: Input quadrature means (<x>, <y>)
        settings: Squeezing and beamsplitter
        n_samples: Number of draws
        rng: Random generator
        cov: Input covariance, default the coherent-state 1/4 identity
    """
    if n_samples < 1:
        raise PhysicsRangeError(f"n_samples must be at least 1, got {n_samples}")
    if settings.symbolic:
        raise PhysicsRangeError("Monte Carlo needs numeric settings")
    cov = np.eye(2) * VACUUM_QUADRATURE_VARIANCE if cov is None else cov
    inp, out = _teleport_samples(settings, mean, cov, n_samples, rng)
    return _stats(inp, out, settings)


@dataclass(frozen=True, eq=False)
class MultiplexedStats:
    channels: Tuple[TeleportStats, ...]
    cross_covariance: np.ndarray

    @property
    def max_cross_correlation(self) -> float:
        """Largest |correlation| between quadratures of different channels."""
        cov = self.cross_covariance
        sd = np.sqrt(np.diag(cov))
        corr = cov / np.outer(sd, sd)
        n = len(self.channels)
        worst = 0.0
        for i in range(n):
            for j in range(n):
                if i != j:
                    worst = max(worst, float(np.max(np.abs(corr[2 * i:2 * i + 2, 2 * j:2 * j + 2]))))
        return worst


def teleport_multiplexed(settings: Sequence[SqueezeSettings], mean: Sequence[float],
                         n_samples: int, rngs: Sequence[np.random.Generator],
                         cov: Optional[np.ndarray] = None) -> MultiplexedStats:
    """
    Independent pipelines, one per channel, each with its own source symbols
    and generator; reports per-channel statistics and the 2N x 2N covariance
    of all output quadratures.
    """
    if len(settings) != len(rngs):
        raise PhysicsRangeError("one random generator per channel is required")
    cov = np.eye(2) * VACUUM_QUADRATURE_VARIANCE if cov is None else cov
    stats, outputs = [], []
    for s, rng in zip(settings, rngs):
        inp, out = _teleport_samples(s, mean, cov, n_samples, rng)
        stats.append(_stats(inp, out, s))
        outputs.append(out)
    joint = np.hstack(outputs)
    dbg(f"Teletrasporto multiplexato su {len(settings)} canali, {n_samples} campioni")
    return MultiplexedStats(tuple(stats), _cov(joint))
