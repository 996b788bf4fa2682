"""Axial (z) propagator of the particle dressed by the coherent mode.

With the static amplitude ``G(z, t) = G0 e^{-iwt} + (2S/w) e^{-iwt/2} sin(wt/2) z``
the z Hamiltonian ``(p + 2S Im G)^2/2m + S^2/2m`` is quadratic:

    H_z = p^2/2m + psi(t)(z p + p z) + m W2(t) z^2/2 + e(t) p + f(t) z + h(t).

Its kernel is built from the fundamental pair of

    y'' + 4 psi y' + W2 y = 0,    F(t0)=1, F'(t0)=0,   G(t0)=0, G'(t0)=1,

with ``E(t) = exp(2 int_{t0}^t psi)`` and Wronskian ``F G' - F' G = E^{-2}``.
In quadratic form

    K(zf, t; zi, t0) = e^{-i pi/4} sqrt(m / (2 pi E G))
        exp{i [alpha zf^2 + beta zf zi + delta zi^2 + mu zf + nu zi + lam]},

    alpha = m G'/(2G), beta = -m/(E G), delta = m F/(2G),
    mu = m d1/(E G), nu = d2 - m F d1/G, lam = d3 + m F d1^2/(2G),

which stays regular where F changes sign; it degenerates only where G = 0.
The equivalent exponential form with ``c1 = m F'/F``, ``c2 = E F``,
``c3 = -G/(m F)`` is

    sqrt(i/(2 pi c3 c2)) exp{(zf/c2 + d1 - zi)^2/(2 i c3) + i c1 zf^2/2 + i d2 zi + i d3}.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import cumulative_simpson
from scipy.interpolate import CubicHermiteSpline

from . import _backend
from .core import PhysParams, TimeGrid, coupling_strength
from .errors import (DegenerateKernel, NonPositiveTime, OutsideWindow, ResolutionError,
                     ValidationError, ZeroCrossing)
from .mathieu import mathieu_basis_array

F_RTOL = 1e-10
#: |E G / m| below which the kernel is treated as degenerate (caustic).
DEGENERATE_TOL = 1e-10
_MAX_REFINE = 8


# ------------------------------------------------------------------ coefficients

@dataclass(frozen=True)
class AxialCoeffs:
    """psi, W2 (= omega^2(t)), e, f, h at one time or on an array of times."""

    psi: np.ndarray
    omega2: np.ndarray
    e: np.ndarray
    f: np.ndarray
    h: np.ndarray

    def as_array(self) -> np.ndarray:
        """Stack as ``(n, 5)`` rows of (psi, omega2, e, f, h)."""
        return np.column_stack([np.atleast_1d(x) for x in (self.psi, self.omega2, self.e, self.f, self.h)])


def _gamma(params: PhysParams, t):
    """Im(G0 e^{-iwt}), the z-independent part of Im G."""
    return np.imag(params.g0 * np.exp(-1j * params.omega * np.asarray(t, float)))


def axial_coeffs(params: PhysParams, t) -> AxialCoeffs:
    """Quadratic-Hamiltonian coefficients at time(s) ``t``."""
    S = coupling_strength(params)
    m, w = params.mass, params.omega
    t = np.asarray(t, dtype=float)
    s2 = np.sin(0.5 * w * t) ** 2
    gam = _gamma(params, t)
    return AxialCoeffs(
        psi=-2.0 * S * S / (m * w) * s2,
        omega2=16.0 * S ** 4 / (m * m * w * w) * s2 * s2,
        e=2.0 * S / m * gam,
        f=-8.0 * S ** 3 / (m * w) * s2 * gam,
        h=S * S / m * (0.5 + 2.0 * gam * gam),
    )


def psi_integral(params: PhysParams, t, t0: float = 0.0):
    """Exact ``int_{t0}^t psi``."""
    S = coupling_strength(params)
    m, w = params.mass, params.omega
    t = np.asarray(t, dtype=float)
    return -(S * S / (m * w)) * ((t - t0) - (np.sin(w * t) - np.sin(w * t0)) / w)


# ---------------------------------------------------------------------- F solver

@dataclass(frozen=True)
class FSolution:
    """Fundamental pair of the auxiliary ODE on a time grid starting at ``t_start``."""

    times: np.ndarray
    F: np.ndarray
    dF: np.ndarray
    G: np.ndarray
    dG: np.ndarray
    error_estimate: float
    zero_crossing: float | None = None

    @property
    def t_start(self) -> float:
        return float(self.times[0])

    def __iter__(self):
        # unpacks as (F, F')
        return iter((self.F, self.dF))


def _integrate_pair(p_fun, q_fun, t0, dt, n, sub):
    h = dt / sub
    s = t0 + 0.5 * h * np.arange(2 * n * sub + 1)
    y = _backend.rk4_linear2(p_fun(s), q_fun(s), h, np.eye(2))
    return y[::sub]


def solve_linear2(p_fun, q_fun, grid: TimeGrid, rtol: float = F_RTOL):
    """Fundamental pair of ``y'' + p y' + q y = 0`` from ``grid.t_start`` with step halving.

    Returns ``(Y, err)`` with ``Y[k]`` the 2x2 matrix ``[[F, F'], [G, G']]`` at node k.
    """
    n, dt, t0 = grid.n_steps, grid.dt, grid.t_start
    coarse = _integrate_pair(p_fun, q_fun, t0, dt, n, 1)
    sub = 1
    for _ in range(_MAX_REFINE):
        sub *= 2
        fine = _integrate_pair(p_fun, q_fun, t0, dt, n, sub)
        scale = np.maximum.accumulate(np.maximum(1.0, np.abs(fine).max(axis=(1, 2))))
        err = float((np.abs(fine - coarse).max(axis=(1, 2)) / scale).max() / 15.0)
        if err <= rtol:
            return fine + (fine - coarse) / 15.0, err
        coarse = fine
    raise ResolutionError(f"step halving did not reach rtol={rtol:g}; reduce dt")


def solve_F(params: PhysParams, grid: TimeGrid, allow_zero_crossing: bool = False) -> FSolution:
    """Integrate ``F'' + 4 psi F' + W2 F = 0`` (and its companion G) on ``grid``.

    RK4 with step halving; relative error below 1e-10. By default a sign change
    of F raises ZeroCrossing; pass ``allow_zero_crossing=True`` to record the
    first crossing time instead (the kernel representation used here is regular
    there).
    """
    if params.omega * grid.dt >= 0.1:
        raise ResolutionError(f"omega*dt = {params.omega * grid.dt:.3g} must be < 0.1")

    def p_fun(s):
        return 4.0 * axial_coeffs(params, s).psi

    def q_fun(s):
        return axial_coeffs(params, s).omega2

    Y, err = solve_linear2(p_fun, q_fun, grid)
    F, dF, G, dG = Y[:, 0, 0], Y[:, 0, 1], Y[:, 1, 0], Y[:, 1, 1]
    times = grid.times
    crossing = None
    bad = np.nonzero(F <= 0)[0]
    if bad.size:
        k = bad[0]
        crossing = float(times[k - 1] + (times[k] - times[k - 1]) * F[k - 1] / (F[k - 1] - F[k]))
        if not allow_zero_crossing:
            raise ZeroCrossing(f"F reaches zero near t = {crossing:.6g}")
    return FSolution(times, F, dF, G, dG, err, crossing)


# ------------------------------------------------------------------ Mathieu form

def mathieu_F(params: PhysParams, t, mapping: str = "derived"):
    """Closed form of F through even/odd Mathieu functions (cross-check path).

    ``mapping="derived"`` uses ``F = exp(-2 int psi) y`` where ``y`` solves the
    Mathieu equation in ``zeta = wt/2 - pi/4`` with ``q = -4 S^2/(m w^2)``.
    ``mapping="printed"`` uses the exponent ``(4 pi/(mV)) t - (2 pi/(m w V)) sin 2wt``
    and ``q = -2 pi/(m w V)``. In both, FF is the ratio of derivatives at pi/4 and
    A normalises F(0) = 1.
    """
    if mapping not in ("derived", "printed"):
        raise ValidationError("mapping must be 'derived' or 'printed'")
    t = np.asarray(t, dtype=float)
    m, w, V = params.mass, params.omega, params.volume
    zeta = 0.5 * w * t - 0.25 * math.pi
    if mapping == "derived":
        S = coupling_strength(params)
        q = -4.0 * S * S / (m * w * w)
        expo = -2.0 * psi_integral(params, t)
    else:
        q = 0.0 if math.isinf(V) else -2.0 * math.pi / (m * w * V)
        expo = 0.0 if math.isinf(V) else (4 * math.pi / (m * V)) * t - (2 * math.pi / (m * w * V)) * np.sin(2 * w * t)
    ce, cep, se, sep = mathieu_basis_array(0.0, q, np.concatenate(([0.25 * math.pi], zeta.ravel())))
    FF = cep[0] / sep[0]
    A = 1.0 / (ce[0] - FF * se[0])
    y = (ce[1:] + FF * se[1:]).reshape(t.shape)
    return A * np.exp(expo) * y


# --------------------------------------------------------------------- kernel

VARIANTS = (None, "printed_c3", "negative_c2_exponent", "printed_b")


@dataclass(frozen=True)
class AxialKernelState:
    """All time-dependent data of the axial kernel from ``t_start``."""

    params: PhysParams
    times: np.ndarray
    F: np.ndarray
    dF: np.ndarray
    G: np.ndarray
    dG: np.ndarray
    E: np.ndarray
    c1: np.ndarray
    c2: np.ndarray
    c3: np.ndarray
    d1: np.ndarray
    d2: np.ndarray
    d3: np.ndarray
    rates: np.ndarray = field(repr=False)  # d1', d2', d3' at nodes
    caustic_time: float | None = None
    zero_crossing: float | None = None
    variant: str | None = None

    @property
    def t_start(self) -> float:
        return float(self.times[0])

    @property
    def t_end(self) -> float:
        return float(self.times[-1])

    # interpolation -------------------------------------------------------
    def _splines(self):
        cache = self.__dict__.get("_spl")
        if cache is None:
            co = axial_coeffs(self.params, self.times)
            p, q = 4 * co.psi, co.omega2
            ddF = -p * self.dF - q * self.F
            ddG = -p * self.dG - q * self.G
            t = self.times
            cache = {
                "F": CubicHermiteSpline(t, self.F, self.dF),
                "dF": CubicHermiteSpline(t, self.dF, ddF),
                "G": CubicHermiteSpline(t, self.G, self.dG),
                "dG": CubicHermiteSpline(t, self.dG, ddG),
                "d1": CubicHermiteSpline(t, self.d1, self.rates[:, 0]),
                "d2": CubicHermiteSpline(t, self.d2, self.rates[:, 1]),
                "d3": CubicHermiteSpline(t, self.d3, self.rates[:, 2]),
            }
            object.__setattr__(self, "_spl", cache)
        return cache

    def at(self, t: float) -> dict:
        """Interpolated scalars (F, dF, G, dG, E, d1, d2, d3) at time ``t``."""
        t = float(t)
        tol = 1e-12 * max(1.0, abs(self.t_end))
        if t < self.t_start - tol or t > self.t_end + tol:
            raise OutsideWindow(f"t = {t:g} outside kernel window [{self.t_start:g}, {self.t_end:g}]")
        k = int(np.clip(np.searchsorted(self.times, t), 0, self.times.size - 1))
        for j in (k - 1, k):
            if 0 <= j < self.times.size and abs(self.times[j] - t) <= tol:
                return {n: float(getattr(self, n)[j]) for n in ("F", "dF", "G", "dG", "E", "d1", "d2", "d3")}
        spl = self._splines()
        out = {n: float(s(t)) for n, s in spl.items()}
        out["E"] = float(np.exp(2 * psi_integral(self.params, t, self.t_start)))
        return out

    def quadratic_form(self, t: float) -> dict:
        """Coefficients (pref, alpha, beta, delta, mu, nu, lam) of the kernel at ``t``."""
        if self.variant is not None:
            raise ValidationError("quadratic form is defined for the derived coefficient set only")
        if t <= self.t_start:
            raise NonPositiveTime("kernel needs t > t_start")
        if self.caustic_time is not None and t >= self.caustic_time:
            raise DegenerateKernel(f"t = {t:g} is at or beyond the caustic at {self.caustic_time:.6g}")
        s = self.at(t)
        m = self.params.mass
        X = s["E"] * s["G"]
        if abs(X / m) < DEGENERATE_TOL:
            raise DegenerateKernel(f"|c2 c3| = {abs(X / m):.3g} below tolerance at t = {t:g}")
        Fv, Gv, d1 = s["F"], s["G"], s["d1"]
        return {
            "pref": np.exp(-0.25j * math.pi) * math.sqrt(m / (2 * math.pi * X)),
            "alpha": 0.5 * m * s["dG"] / Gv,
            "beta": -m / X,
            "delta": 0.5 * m * Fv / Gv,
            "mu": m * d1 / X,
            "nu": s["d2"] - m * Fv * d1 / Gv,
            "lam": s["d3"] + 0.5 * m * Fv * d1 * d1 / Gv,
        }

    def c_values(self, t: float) -> dict:
        """(c1, c2, c3, d1, d2, d3) at ``t`` (interpolated at off-grid times)."""
        k = np.searchsorted(self.times, t)
        if k < self.times.size and abs(self.times[k] - t) <= 1e-12 * max(1.0, abs(t)):
            return {n: float(getattr(self, n)[k]) for n in ("c1", "c2", "c3", "d1", "d2", "d3")}
        if self.variant is not None:
            names = ("c1", "c2", "c3", "d1", "d2", "d3")
            return {n: float(np.interp(t, self.times, getattr(self, n))) for n in names}
        s = self.at(t)
        m = self.params.mass
        return {"c1": m * s["dF"] / s["F"], "c2": s["E"] * s["F"], "c3": -s["G"] / (m * s["F"]),
                "d1": s["d1"], "d2": s["d2"], "d3": s["d3"]}


def kernel_coefficients(params: PhysParams, grid: TimeGrid, fsol: FSolution | None = None,
                        variant: str | None = None) -> AxialKernelState:
    """Build F, G and the c/d coefficient sequences on ``grid`` (from ``grid.t_start``).

    ``variant`` selects an alternative coefficient convention kept for
    falsification tests: ``"printed_c3"`` (c3 as half the sum of the two
    integrals with 1/(2m)), ``"negative_c2_exponent"`` (c2 with exp(-2 int psi))
    or ``"printed_b"`` (inhomogeneous rates without the e*c1 coupling). The
    default is the consistent set.
    """
    if variant not in VARIANTS:
        raise ValidationError(f"unknown variant {variant!r}")
    if fsol is None:
        fsol = solve_F(params, grid, allow_zero_crossing=True)
    t = fsol.times
    if t.size != grid.n_steps + 1 or abs(t[0] - grid.t_start) > 1e-12:
        raise ValidationError("F solution does not match the grid")
    m = params.mass
    F, dF, G, dG = fsol.F, fsol.dF, fsol.G, fsol.dG
    Ipsi = psi_integral(params, t, grid.t_start)
    E = np.exp(2 * Ipsi)
    co = axial_coeffs(params, t)
    e, f, h = co.e, co.f, co.h

    with np.errstate(divide="ignore", invalid="ignore"):
        c1 = m * dF / F
        c2 = E * F
        c3 = -G / (m * F)
    if variant == "printed_c3":
        w = np.exp(-4 * Ipsi)
        c3 = -(cumulative_simpson(w, x=t, initial=0.0) + cumulative_simpson(1.0 / F ** 2, x=t, initial=0.0)) / (2 * m)
    elif variant == "negative_c2_exponent":
        c2 = np.exp(-2 * Ipsi) * F

    if variant == "printed_b":
        with np.errstate(divide="ignore", invalid="ignore"):
            r1 = -e / c2 + f * c3 * c2
            r2 = -e * c1 / c2 - f * c2
    else:
        r1 = -e * E * dG - f * E * G / m
        r2 = -(e * m * dF + f * F) * E
    d1 = cumulative_simpson(r1, x=t, initial=0.0)
    d2 = cumulative_simpson(r2, x=t, initial=0.0)
    r3 = -r2 * d1 - h
    d3 = cumulative_simpson(r3, x=t, initial=0.0)

    caustic = None
    zeros = np.nonzero(G[1:] <= 0)[0]
    if zeros.size:
        k = zeros[0] + 1
        caustic = float(t[k - 1] + (t[k] - t[k - 1]) * G[k - 1] / (G[k - 1] - G[k]))
    return AxialKernelState(params, t, F, dF, G, dG, E, c1, c2, c3, d1, d2, d3,
                            np.column_stack([r1, r2, r3]), caustic, fsol.zero_crossing, variant)


def build_axial_kernel(params: PhysParams, t_final: float, dt: float = 1e-3,
                       t_start: float = 0.0, variant: str | None = None) -> AxialKernelState:
    """Convenience wrapper: kernel state on ``[t_start, t_final]`` with step ``dt``."""
    if not t_final > t_start:
        raise NonPositiveTime("t_final must exceed t_start")
    grid = TimeGrid.spanning(t_final, dt, t_start)
    return kernel_coefficients(params, grid, variant=variant)


def kz(params: PhysParams, state: AxialKernelState, z_f, z_i, t: float,
       label_order: str = "derived"):
    """Axial kernel K(z_f, t; z_i, t_start); broadcasts over ``z_f``, ``z_i``.

    ``label_order="printed"`` swaps the roles of the two endpoints in the
    exponential form (kept for falsification tests).
    """
    if state.params is not params and state.params != params:
        raise ValidationError("kernel state was built for different parameters")
    zf = np.asarray(z_f, dtype=float)
    zi = np.asarray(z_i, dtype=float)
    if label_order not in ("derived", "printed"):
        raise ValidationError("label_order must be 'derived' or 'printed'")
    if label_order == "printed":
        zf, zi = zi, zf
    if state.variant is None:
        try:
            qf = state.quadratic_form(t)
        except DegenerateKernel:
            raise
        phase = (qf["alpha"] * zf * zf + qf["beta"] * zf * zi + qf["delta"] * zi * zi
                 + qf["mu"] * zf + qf["nu"] * zi + qf["lam"])
        return qf["pref"] * np.exp(1j * phase)
    return kz_exponential_form(state, zf, zi, t)


def kz_exponential_form(state: AxialKernelState, z_f, z_i, t: float):
    """Kernel evaluated literally through c1..c3, d1..d3 (principal square root)."""
    if t <= state.t_start:
        raise NonPositiveTime("kernel needs t > t_start")
    c = state.c_values(t)
    if abs(c["c3"] * c["c2"]) < DEGENERATE_TOL or not np.isfinite(c["c3"] * c["c2"]):
        raise DegenerateKernel(f"|c2 c3| degenerate at t = {t:g}")
    zf = np.asarray(z_f, dtype=float)
    zi = np.asarray(z_i, dtype=float)
    pref = np.sqrt(1j / (2 * math.pi * c["c3"] * c["c2"]))
    expo = ((zf / c["c2"] + c["d1"] - zi) ** 2 / (2j * c["c3"]) + 0.5j * c["c1"] * zf * zf
            + 1j * c["d2"] * zi + 1j * c["d3"])
    return pref * np.exp(expo)


def free_kernel_1d(mass: float, z_f, z_i, t: float):
    """Free-particle kernel ``sqrt(m/(2 pi i t)) exp(i m (z_f - z_i)^2 / (2t))``."""
    if not t > 0:
        raise NonPositiveTime("t must be > 0")
    d = np.asarray(z_f, float) - np.asarray(z_i, float)
    return np.sqrt(mass / (2j * math.pi * t)) * np.exp(0.5j * mass * d * d / t)
