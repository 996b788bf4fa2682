"""Landau propagator in the plane transverse to a uniform magnetic field.

Symmetric gauge ``A = H x r / 2`` with H along z gives

    H_xy = (px^2 + py^2)/2m + (w1/2)(y px - x py) + (m/2)(w1/2)^2 (x^2 + y^2),

with cyclotron frequency ``w1 = H/(m c)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from .core import PhysParams
from .errors import CausticTime, NonPositiveTime, ValidationError

CAUSTIC_TOL = 1e-9


def cyclotron_frequency(params: PhysParams) -> float:
    """``w1 = H/(m c)``."""
    return params.magnetic_field / (params.mass * params.light_speed)


def larmor_frequency(params: PhysParams) -> float:
    return 0.5 * cyclotron_frequency(params)


def vector_potential(params: PhysParams, x, y):
    """Symmetric-gauge potential (Ax, Ay); Az = 0."""
    H = params.magnetic_field
    return -0.5 * H * np.asarray(y, float), 0.5 * H * np.asarray(x, float)


@dataclass(frozen=True)
class PlanarEndpoints:
    xi: float
    yi: float
    xf: float
    yf: float
    t: float

    def __post_init__(self):
        if not self.t > 0:
            raise NonPositiveTime(f"t must be > 0, got {self.t}")
        if not all(np.isfinite([self.xi, self.yi, self.xf, self.yf])):
            raise ValidationError("endpoint coordinates must be finite")


def _check_caustic(w1: float, t: float):
    if not t > 0:
        raise NonPositiveTime(f"t must be > 0, got {t}")
    half = 0.5 * w1 * t
    if w1 != 0 and abs(math.sin(half)) < CAUSTIC_TOL and round(half / math.pi) >= 1:
        raise CausticTime(f"w1 t/2 = {half:.12g} is within {CAUSTIC_TOL:g} of a multiple of pi")


def kxy_coefficients(mass: float, w1: float, t: float):
    """``(pref, a, b)`` with K = pref exp{i a |rf - ri|^2 + i b (xi yf - xf yi)}."""
    _check_caustic(w1, t)
    if w1 == 0:
        return mass / (2j * math.pi * t), mass / (2 * t), 0.0
    half = 0.5 * w1 * t
    return (mass * w1 / (4j * math.pi * math.sin(half)),
            0.25 * mass * w1 / math.tan(half),
            0.5 * mass * w1)


def kxy_array(params: PhysParams, xf, yf, xi, yi, t: float, omega1: float | None = None):
    """Vectorised kernel; ``omega1`` overrides the cyclotron frequency."""
    w1 = cyclotron_frequency(params) if omega1 is None else float(omega1)
    pref, a, b = kxy_coefficients(params.mass, w1, t)
    xf, yf, xi, yi = (np.asarray(v, float) for v in (xf, yf, xi, yi))
    return pref * np.exp(1j * a * ((xf - xi) ** 2 + (yf - yi) ** 2) + 1j * b * (xi * yf - xf * yi))


def kxy(params: PhysParams, ep: PlanarEndpoints, omega1: float | None = None) -> complex:
    """Landau kernel ``K(xf, yf; xi, yi; t)``."""
    return complex(kxy_array(params, ep.xf, ep.yf, ep.xi, ep.yi, ep.t, omega1))


def free_kernel_2d(mass: float, xf, yf, xi, yi, t: float):
    if not t > 0:
        raise NonPositiveTime("t must be > 0")
    r2 = (np.asarray(xf) - xi) ** 2 + (np.asarray(yf) - yi) ** 2
    return mass / (2j * math.pi * t) * np.exp(0.5j * mass * r2 / t)


def schrodinger_residual_xy(params: PhysParams, ep: PlanarEndpoints, h: float,
                            omega1: float | None = None) -> float:
    """Relative residual ``|(i d_t - H_xy) K| / |K|`` at the final point of ``ep``.

    Second-order central differences of step ``h`` in xf, yf and t. The
    Hamiltonian always uses ``w1 = H/(mc)``; ``omega1`` only changes the kernel.
    """
    m = params.mass
    wl = larmor_frequency(params)

    def K(dx=0.0, dy=0.0, dt=0.0):
        return kxy_array(params, ep.xf + dx, ep.yf + dy, ep.xi, ep.yi, ep.t + dt, omega1)

    k0 = K()
    dKdt = (K(dt=h) - K(dt=-h)) / (2 * h)
    kxp, kxm, kyp, kym = K(dx=h), K(dx=-h), K(dy=h), K(dy=-h)
    lap = (kxp + kxm + kyp + kym - 4 * k0) / (h * h)
    dx = (kxp - kxm) / (2 * h)
    dy = (kyp - kym) / (2 * h)
    x, y = ep.xf, ep.yf
    Hk = -lap / (2 * m) + wl * (-1j) * (y * dx - x * dy) + 0.5 * m * wl * wl * (x * x + y * y) * k0
    return float(abs(1j * dKdt - Hk) / abs(k0))


def classical_generator(params: PhysParams) -> np.ndarray:
    """Matrix L with d/dt (x, y, px, py) = L (x, y, px, py)."""
    m = params.mass
    wl = larmor_frequency(params)
    return np.array([
        [0.0, wl, 1.0 / m, 0.0],
        [-wl, 0.0, 0.0, 1.0 / m],
        [-m * wl * wl, 0.0, 0.0, wl],
        [0.0, -m * wl * wl, -wl, 0.0],
    ])


def classical_orbit(params: PhysParams, phase_point, t):
    """Canonical phase-space point after time ``t`` (exact for the quadratic Hamiltonian)."""
    return expm(classical_generator(params) * float(t)) @ np.asarray(phase_point, float)
