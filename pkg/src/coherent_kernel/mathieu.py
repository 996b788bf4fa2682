"""Even/odd fundamental solutions of the Mathieu equation ``w'' + (a - 2q cos 2z) w = 0``.

The basis is fixed by initial data at z = 0:

    w_even(0) = 1, w_even'(0) = 0,    w_odd(0) = 0, w_odd'(0) = 1.

This differs from the normalisation of computer-algebra ``MathieuC/MathieuS`` at
non-characteristic ``a`` only by constant factors, which the consumers absorb
into their own integration constants.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _backend
from .errors import MathieuEvaluationFailure, ValidationError

Q_MAX = 1e3
_TOL = 1e-11
_H0 = 0.02
_MAX_HALVINGS = 12


@dataclass(frozen=True)
class MathieuParams:
    a: float
    q: float
    z: float
    q_max: float = Q_MAX

    def __post_init__(self):
        for name in ("a", "q", "z"):
            v = getattr(self, name)
            if not np.isfinite(v) or np.iscomplexobj(v):
                raise ValidationError(f"Mathieu parameter {name} must be a finite real, got {v!r}")
            object.__setattr__(self, name, float(v))
        if abs(self.q) > self.q_max:
            raise ValidationError(f"|q| = {abs(self.q):g} exceeds the configured bound {self.q_max:g}")


def _closed_form(a: float, z: np.ndarray):
    """Exact basis for q = 0."""
    if a == 0:
        one = np.ones_like(z)
        return one, np.zeros_like(z), z.copy(), one.copy()
    k = math.sqrt(abs(a))
    if a > 0:
        c, s = np.cos(k * z), np.sin(k * z)
        return c, -k * s, s / k, c
    c, s = np.cosh(k * z), np.sinh(k * z)
    return c, k * s, s / k, c


def _march(a, q, knots, h):
    """RK4 through consecutive knots starting at 0; returns (len(knots), 2, 2)."""
    y = np.array([[1.0, 0.0], [0.0, 1.0]])
    out = np.empty((knots.size, 2, 2))
    start = 0.0
    for i, end in enumerate(knots):
        span = end - start
        if span > 0:
            n = max(1, int(math.ceil(span / h)))
            s = np.linspace(start, end, 2 * n + 1)
            coef = a - 2.0 * q * np.cos(2.0 * s)
            y = _backend.rk4_linear2(np.zeros_like(s), coef, span / n, y)[-1]
        out[i] = y
        start = end
    return out


def mathieu_basis_array(a: float, q: float, z, rtol: float = _TOL):
    """Vectorised basis ``(w_even, w_even', w_odd, w_odd')`` at arbitrary real ``z``.

    Integrates from 0 to ``max|z|`` with classical RK4, halving the step until
    two successive resolutions agree to ``rtol`` (relative to the running
    scale), then returns the Richardson-extrapolated values. Negative
    arguments use parity.
    """
    MathieuParams(a, q, 0.0)
    z = np.asarray(z, dtype=float)
    if not np.all(np.isfinite(z)):
        raise ValidationError("z must be finite")
    flat = z.ravel()
    if q == 0:
        res = _closed_form(float(a), flat)
        return tuple(r.reshape(z.shape) for r in res)

    mag = np.abs(flat)
    knots, inverse = np.unique(mag, return_inverse=True)
    h = _H0 / max(1.0, math.sqrt(abs(a) + 2 * abs(q)))
    coarse = _march(a, q, knots, h)
    for _ in range(_MAX_HALVINGS):
        h *= 0.5
        fine = _march(a, q, knots, h)
        scale = np.maximum(1.0, np.abs(fine).max(axis=(1, 2)))
        err = np.abs(fine - coarse).max(axis=(1, 2)) / 15.0
        if np.all(err <= rtol * scale):
            best = fine + (fine - coarse) / 15.0
            break
        coarse = fine
    else:
        raise MathieuEvaluationFailure(f"step halving did not reach rtol={rtol:g} for a={a}, q={q}")

    v = best[inverse]
    we, wep = v[:, 0, 0], v[:, 0, 1]
    wo, wop = v[:, 1, 0], v[:, 1, 1]
    neg = flat < 0
    wep = np.where(neg, -wep, wep)
    wo = np.where(neg, -wo, wo)
    return tuple(r.reshape(z.shape) for r in (we, wep, wo, wop))


def mathieu_basis(p: MathieuParams):
    """``(w_even, w_even', w_odd, w_odd')`` at ``p.z``."""
    return tuple(float(r[0]) for r in mathieu_basis_array(p.a, p.q, np.array([p.z])))


def wronskian(we, wep, wo, wop):
    return we * wop - wep * wo
