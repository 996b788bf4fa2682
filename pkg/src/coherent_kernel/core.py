"""Physical parameters, grids and shared numerical helpers.

Units: hbar = 1 throughout. The charge ``e`` and the light speed ``c`` stay
explicit (default 1). The light-matter coupling is taken as

    S(omega) = e * sqrt(2 pi omega / V),

which makes ``S**2 = 2 pi omega e**2 / V`` and reproduces the Mathieu
parameter ``q = -2 pi / (m omega V)`` used for the closed-form F(t).
"""
from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError


def _positive(name, value, allow_inf=False):
    value = float(value)
    if math.isnan(value) or value <= 0.0 or (math.isinf(value) and not allow_inf):
        raise ValidationError(f"{name} must be strictly positive and finite, got {value!r}")
    return value


@dataclass(frozen=True)
class PhysParams:
    """All constants of the particle + single-mode + magnetic-field model.

    ``volume`` may be ``math.inf``, which switches the coupling off.
    """

    mass: float
    omega: float
    volume: float
    charge: float = 1.0
    light_speed: float = 1.0
    magnetic_field: float = 0.0
    g0: complex = 0j

    def __post_init__(self):
        object.__setattr__(self, "mass", _positive("mass", self.mass))
        object.__setattr__(self, "omega", _positive("omega", self.omega))
        object.__setattr__(self, "volume", _positive("volume", self.volume, allow_inf=True))
        object.__setattr__(self, "light_speed", _positive("light_speed", self.light_speed))
        charge = float(self.charge)
        field = float(self.magnetic_field)
        if not math.isfinite(charge):
            raise ValidationError(f"charge must be finite, got {charge!r}")
        if not math.isfinite(field) or field < 0.0:
            raise ValidationError(f"magnetic_field must be finite and >= 0, got {field!r}")
        g0 = complex(self.g0)
        if not (math.isfinite(g0.real) and math.isfinite(g0.imag)):
            raise ValidationError(f"g0 must be finite, got {g0!r}")
        object.__setattr__(self, "charge", charge)
        object.__setattr__(self, "magnetic_field", field)
        object.__setattr__(self, "g0", g0)

    @property
    def coupling(self) -> float:
        return coupling_strength(self)

    def replace(self, **changes) -> "PhysParams":
        return dataclasses.replace(self, **changes)


def coupling_strength(params: PhysParams) -> float:
    """S(omega) = e sqrt(2 pi omega / V)."""
    if math.isinf(params.volume):
        return 0.0
    return params.charge * math.sqrt(2.0 * math.pi * params.omega / params.volume)


def mathieu_q(params: PhysParams) -> float:
    """Mathieu parameter of the closed-form auxiliary function, -2 pi / (m omega V)."""
    return -2.0 * math.pi / (params.mass * params.omega * params.volume)


@dataclass(frozen=True)
class TimeGrid:
    """Uniform time grid ``t_start + k dt`` for ``k = 0 .. n_steps``."""

    dt: float
    n_steps: int
    t_start: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "dt", _positive("dt", self.dt))
        if int(self.n_steps) != self.n_steps or self.n_steps < 1:
            raise ValidationError(f"n_steps must be an integer >= 1, got {self.n_steps!r}")
        object.__setattr__(self, "n_steps", int(self.n_steps))
        t0 = float(self.t_start)
        if not math.isfinite(t0) or t0 < 0.0:
            raise ValidationError(f"t_start must be finite and >= 0, got {t0!r}")
        object.__setattr__(self, "t_start", t0)

    @classmethod
    def spanning(cls, t_final: float, dt: float, t_start: float = 0.0) -> "TimeGrid":
        """Grid from ``t_start`` to ``t_final`` with a step no larger than ``dt``."""
        span = float(t_final) - float(t_start)
        if span <= 0.0:
            raise ValidationError(f"t_final must exceed t_start, got {t_final!r} <= {t_start!r}")
        n = max(1, int(math.ceil(span / dt - 1e-9)))
        return cls(dt=span / n, n_steps=n, t_start=t_start)

    @property
    def t_final(self) -> float:
        return self.t_start + self.n_steps * self.dt

    @property
    def times(self) -> np.ndarray:
        return self.t_start + self.dt * np.arange(self.n_steps + 1)


@dataclass(frozen=True)
class SpatialGrid1D:
    """Uniform grid of ``n`` points from ``lo`` to ``hi`` inclusive."""

    lo: float
    hi: float
    n: int

    def __post_init__(self):
        lo, hi = float(self.lo), float(self.hi)
        if not (math.isfinite(lo) and math.isfinite(hi)) or hi <= lo:
            raise ValidationError(f"grid bounds must satisfy lo < hi, got ({lo!r}, {hi!r})")
        if int(self.n) != self.n or self.n < 8:
            raise ValidationError(f"grid needs at least 8 points, got {self.n!r}")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)
        object.__setattr__(self, "n", int(self.n))

    @classmethod
    def from_spacing(cls, lo: float, hi: float, spacing: float) -> "SpatialGrid1D":
        spacing = _positive("spacing", spacing)
        n = int(round((hi - lo) / spacing)) + 1
        return cls(lo, lo + (n - 1) * spacing, n)

    @classmethod
    def centered(cls, center: float, half_width: float, spacing: float) -> "SpatialGrid1D":
        half = int(round(half_width / spacing))
        return cls(center - half * spacing, center + half * spacing, 2 * half + 1)

    @property
    def spacing(self) -> float:
        return (self.hi - self.lo) / (self.n - 1)

    @property
    def center(self) -> float:
        return 0.5 * (self.lo + self.hi)

    @property
    def points(self) -> np.ndarray:
        return np.linspace(self.lo, self.hi, self.n)


@dataclass(frozen=True)
class SpatialGrid2D:
    x: SpatialGrid1D
    y: SpatialGrid1D

    @classmethod
    def square(cls, center, half_width: float, spacing: float) -> "SpatialGrid2D":
        cx, cy = center
        return cls(SpatialGrid1D.centered(cx, half_width, spacing),
                   SpatialGrid1D.centered(cy, half_width, spacing))

    @property
    def shape(self):
        return (self.x.n, self.y.n)

    @property
    def cell_area(self) -> float:
        return self.x.spacing * self.y.spacing

    def mesh(self):
        """Coordinate arrays with ``indexing='ij'`` (x along axis 0)."""
        return np.meshgrid(self.x.points, self.y.points, indexing="ij")


def gaussian_integral(a, b):
    """Integral of exp(-a x^2 + b x) over the real line (Re a > 0), complex-valued."""
    a = np.asarray(a, dtype=complex)
    return np.sqrt(np.pi / a) * np.exp(b * b / (4.0 * a))
