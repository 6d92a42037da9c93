"""Single-photon temporal wavepackets on uniform time grids.

All quantities are dimensionless: times are measured in units of an inverse
linewidth, so a linewidth of 1 and a time of 1 are reciprocal.

Analytic shapes are normalized by construction. Grid-sampled shapes
(:class:`Sampled`) carry their own :class:`TimeGrid` and are normalized under
trapezoid quadrature on that grid.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any

import numpy as np

from .errors import CoverageError, CoverageWarning, NormalizationError

# captured-norm thresholds used by sample()
COVERAGE_ERROR = 0.99
COVERAGE_WARN = 1.0 - 1e-6
NORM_TOL = 1e-6


@dataclass(frozen=True)
class TimeGrid:
    """Uniform discretization of the window ``[t_min, t_max]``."""

    t_min: float
    t_max: float
    n_points: int

    def __post_init__(self):
        if not self.t_max > self.t_min:
            raise ValueError(f"t_max ({self.t_max}) must exceed t_min ({self.t_min})")
        if int(self.n_points) != self.n_points or self.n_points < 2:
            raise ValueError(f"n_points must be an integer >= 2, got {self.n_points}")
        object.__setattr__(self, "t_min", float(self.t_min))
        object.__setattr__(self, "t_max", float(self.t_max))
        object.__setattr__(self, "n_points", int(self.n_points))

    @property
    def spacing(self) -> float:
        return (self.t_max - self.t_min) / (self.n_points - 1)

    @cached_property
    def times(self) -> np.ndarray:
        return np.linspace(self.t_min, self.t_max, self.n_points)

    @cached_property
    def weights(self) -> np.ndarray:
        """Trapezoid quadrature weights."""
        w = np.full(self.n_points, self.spacing)
        w[0] = w[-1] = 0.5 * self.spacing
        return w

    def integrate(self, values, axis: int = -1):
        """Trapezoid rule along ``axis``."""
        values = np.asarray(values)
        return np.tensordot(values, self.weights, axes=([axis], [0]))

    def refined(self) -> "TimeGrid":
        """Same window with every interval halved."""
        return TimeGrid(self.t_min, self.t_max, 2 * self.n_points - 1)

    def to_dict(self) -> dict:
        return {"t_min": self.t_min, "t_max": self.t_max, "n_points": self.n_points}

    @classmethod
    def from_dict(cls, d: dict) -> "TimeGrid":
        return cls(float(d["t_min"]), float(d["t_max"]), int(d["n_points"]))


class TemporalShape:
    """Base class for a normalized complex wavepacket f(tau).

    Subclasses implement :meth:`__call__` (vectorized over ``tau``),
    :meth:`mass` (the exact norm captured inside a window) and
    :meth:`to_dict`.
    """

    kind: str = ""

    def __call__(self, tau):
        raise NotImplementedError

    def mass(self, a: float, b: float) -> float:
        raise NotImplementedError

    def to_dict(self) -> dict:
        raise NotImplementedError


def _positive(name, value):
    if not (value > 0 and math.isfinite(value)):
        raise ValueError(f"{name} must be positive and finite, got {value}")


@dataclass(frozen=True)
class ExpDecay(TemporalShape):
    """Exponentially decaying photon ``sqrt(gamma) exp(-i(detuning - i gamma)(tau - start)/2)``.

    ``detuning`` is the per-photon parameter: two photons with detunings
    ``+d`` and ``-d`` differ in carrier frequency by ``d``.
    """

    gamma: float
    detuning: float = 0.0
    start: float = 0.0
    kind = "exp_decay"

    def __post_init__(self):
        _positive("gamma", self.gamma)

    def __call__(self, tau):
        u = np.asarray(tau, dtype=float) - self.start
        on = u >= 0
        uc = np.where(on, u, 0.0)
        amp = math.sqrt(self.gamma) * np.exp(-0.5j * (self.detuning - 1j * self.gamma) * uc)
        return np.where(on, amp, 0.0)

    def mass(self, a, b):
        g, s = self.gamma, self.start
        return math.exp(-g * (max(a, s) - s)) - math.exp(-g * (max(b, s) - s))

    def to_dict(self):
        return {"kind": self.kind, "gamma": self.gamma, "detuning": self.detuning, "start": self.start}


@dataclass(frozen=True)
class ExpDecaySine(TemporalShape):
    """Exponentially damped sinusoid ``N exp(-gamma u/2) sin(omega u)`` with ``u = tau - start``.

    A negative ``omega`` flips the overall sign; the normalization only sees
    ``omega**2``.
    """

    gamma: float
    omega: float
    start: float = 0.0
    kind = "exp_decay_sine"

    def __post_init__(self):
        _positive("gamma", self.gamma)
        if self.omega == 0 or not math.isfinite(self.omega):
            raise ValueError("omega must be nonzero and finite")

    @property
    def amplitude(self) -> float:
        g, w = self.gamma, self.omega
        return math.sqrt(g * (4 * w * w + g * g) / (2 * w * w))

    def __call__(self, tau):
        u = np.asarray(tau, dtype=float) - self.start
        on = u >= 0
        uc = np.where(on, u, 0.0)
        amp = self.amplitude * np.exp(-0.5 * self.gamma * uc) * np.sin(self.omega * uc)
        return np.where(on, amp, 0.0).astype(complex)

    def _cumulative(self, u):
        # integral of exp(-g v) sin^2(w v) over [0, u]
        if u <= 0:
            return 0.0
        g, w = self.gamma, self.omega
        z = complex(g, -2 * w)
        flat = (1 - math.exp(-g * u)) / g
        osc = ((1 - np.exp(-z * u)) / z).real
        return 0.5 * (flat - osc)

    def mass(self, a, b):
        return self.amplitude**2 * (self._cumulative(b - self.start) - self._cumulative(a - self.start))

    def to_dict(self):
        return {"kind": self.kind, "gamma": self.gamma, "omega": self.omega, "start": self.start}


@dataclass(frozen=True)
class Gaussian(TemporalShape):
    """``sqrt(gamma/sqrt(pi)) exp(-(tau - tau0)^2 gamma^2 / 2)``."""

    gamma: float
    tau0: float = 0.0
    kind = "gaussian"

    def __post_init__(self):
        _positive("gamma", self.gamma)

    def __call__(self, tau):
        u = np.asarray(tau, dtype=float) - self.tau0
        amp = math.sqrt(self.gamma / math.sqrt(math.pi)) * np.exp(-0.5 * (u * self.gamma) ** 2)
        return amp.astype(complex)

    def mass(self, a, b):
        g = self.gamma
        return 0.5 * (math.erf(g * (b - self.tau0)) - math.erf(g * (a - self.tau0)))

    def to_dict(self):
        return {"kind": self.kind, "gamma": self.gamma, "tau0": self.tau0}


@dataclass(frozen=True, eq=False)
class Sampled(TemporalShape):
    """Wavepacket known only at the points of ``grid``.

    Evaluation interpolates linearly inside the grid and is zero outside.
    Construction requires unit quadrature norm; use :meth:`from_values` to
    normalize arbitrary samples.
    """

    grid: TimeGrid
    values: np.ndarray = field(repr=False)
    kind = "sampled"

    def __post_init__(self):
        v = np.array(self.values, dtype=complex)
        if v.shape != (self.grid.n_points,):
            raise ValueError(f"expected {self.grid.n_points} samples, got shape {v.shape}")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        n = self.norm()
        if abs(n - 1.0) > NORM_TOL:
            raise NormalizationError(f"sampled shape has quadrature norm {n:.9g}, expected 1")

    @classmethod
    def from_values(cls, grid: TimeGrid, values) -> "Sampled":
        v = np.asarray(values, dtype=complex)
        n = float(grid.integrate(np.abs(v) ** 2))
        if not n > 0:
            raise NormalizationError("cannot normalize an all-zero sample")
        return cls(grid, v / math.sqrt(n))

    def norm(self) -> float:
        return float(self.grid.integrate(np.abs(self.values) ** 2))

    def __call__(self, tau):
        tau = np.asarray(tau, dtype=float)
        t = self.grid.times
        re = np.interp(tau, t, self.values.real, left=0.0, right=0.0)
        im = np.interp(tau, t, self.values.imag, left=0.0, right=0.0)
        return re + 1j * im

    def mass(self, a, b):
        sub = TimeGrid(a, b, max(2, int(round((b - a) / self.grid.spacing)) + 1))
        return float(sub.integrate(np.abs(self(sub.times)) ** 2))

    def to_dict(self):
        return {
            "kind": self.kind,
            "grid": self.grid.to_dict(),
            "values": [[float(z.real), float(z.imag)] for z in self.values],
        }


def evaluate(shape: TemporalShape, tau):
    """Amplitude of ``shape`` at ``tau`` (scalar in, complex scalar out)."""
    out = shape(tau)
    return complex(out) if np.ndim(out) == 0 else out


def _sample_scaled(shape: TemporalShape, grid: TimeGrid) -> tuple[Sampled, float]:
    """Sample ``shape`` and return the renormalization factor that was applied."""
    if isinstance(shape, Sampled) and shape.grid == grid:
        return shape, 1.0
    captured = shape.mass(grid.t_min, grid.t_max)
    if captured < COVERAGE_ERROR:
        raise CoverageError(
            f"grid [{grid.t_min}, {grid.t_max}] captures only {captured:.6g} of the {shape.kind} norm"
        )
    if captured < COVERAGE_WARN:
        warnings.warn(
            f"grid [{grid.t_min}, {grid.t_max}] truncates {1 - captured:.3g} of the {shape.kind} norm",
            CoverageWarning,
            stacklevel=3,
        )
    raw = np.asarray(shape(grid.times), dtype=complex)
    n = float(grid.integrate(np.abs(raw) ** 2))
    scale = 1.0 / math.sqrt(n)
    return Sampled(grid, raw * scale), scale


def sample(shape: TemporalShape, grid: TimeGrid) -> Sampled:
    """Sample ``shape`` on ``grid`` and renormalize under trapezoid quadrature.

    Raises
    ------
    CoverageError
        If the grid window holds less than 99% of the shape's norm. A
        :class:`CoverageWarning` is issued below ``1 - 1e-6``.
    """
    return _sample_scaled(shape, grid)[0]


def captured_norm(shape: TemporalShape, grid: TimeGrid) -> float:
    """Exact fraction of the norm inside the grid window (before renormalization)."""
    return shape.mass(grid.t_min, grid.t_max)


def overlap(f1: TemporalShape, f2: TemporalShape, grid: TimeGrid) -> complex:
    """Indistinguishability factor ``J = integral f1(tau) conj(f2(tau)) dtau``."""
    a = sample(f1, grid).values
    b = sample(f2, grid).values
    # Dividing by the quadrature norms, computed the same way as the
    # numerator, makes identical inputs give exactly 1 rather than 1 - ulp.
    na = grid.integrate(a * np.conj(a)).real
    nb = grid.integrate(b * np.conj(b)).real
    return complex(grid.integrate(a * np.conj(b)) / math.sqrt(na * nb))


_SHAPES = {cls.kind: cls for cls in (ExpDecay, ExpDecaySine, Gaussian)}


def shape_from_dict(d: dict[str, Any]) -> TemporalShape:
    """Build a shape from its JSON form, e.g. ``{"kind": "gaussian", "gamma": 1, "tau0": 0}``."""
    d = dict(d)
    kind = d.pop("kind", None)
    if kind == "sampled":
        grid = TimeGrid.from_dict(d["grid"])
        vals = np.asarray(d["values"], dtype=float)
        if vals.ndim != 2 or vals.shape[1] != 2:
            raise ValueError("sampled values must be a list of [re, im] pairs")
        return Sampled.from_values(grid, vals[:, 0] + 1j * vals[:, 1])
    if kind not in _SHAPES:
        raise ValueError(f"unknown shape kind {kind!r}; expected one of {sorted(_SHAPES) + ['sampled']}")
    try:
        return _SHAPES[kind](**{k: float(v) for k, v in d.items()})
    except TypeError as exc:
        raise ValueError(f"bad fields for {kind}: {exc}") from None
