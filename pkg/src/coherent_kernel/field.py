"""Coherent photon-mode dynamics under a classical dipole drive.

The mode Hamiltonian is ``H0 = w a^+a + g(t) a + g*(t) a^+`` with
``g(t) = -i S u(t)`` and ``u(t)`` the projection of the particle position on the
polarisation axis. The coherent amplitude obeys ``i dG/dt = w G + g*``, so

    G(t) = exp(-i w t) [G0 + S int_0^t exp(i w t') u(t') dt'],

and the accompanying phase is ``Phi0(t) = -int_0^t Re(g G) dt'``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.special import gammaln

from .core import PhysParams, TimeGrid, coupling_strength
from .errors import ResolutionError, TruncationError, ValidationError

#: Oscillation guard for the trapezoid quadratures: w * dt_quad must stay below this.
OSCILLATION_LIMIT = 0.5
#: Top-two-level occupancy allowed for a truncated coherent expansion.
TRUNCATION_THRESHOLD = 1e-10

_ROMBERG_TOL = 1e-14
_ROMBERG_MAX_LEVELS = 16


# --------------------------------------------------------------------------- types

class DriveTrajectory:
    """Scalar drive ``u(t)`` (position along the polarisation, length units).

    Wraps a callable; evaluation is vectorised over numpy arrays.
    """

    def __init__(self, func: Callable, label: str = "custom"):
        if not callable(func):
            raise ValidationError("drive must be callable")
        self._func = func
        self.label = label

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        out = np.asarray(self._func(t), dtype=float)
        if out.shape != t.shape:
            out = np.broadcast_to(out, t.shape).copy()
        return out

    def __repr__(self):
        return f"DriveTrajectory({self.label})"

    @classmethod
    def constant(cls, z: float) -> "DriveTrajectory":
        z = float(z)
        return cls(lambda t: np.full_like(t, z), label=f"constant({z:g})")

    @classmethod
    def zero(cls) -> "DriveTrajectory":
        return cls.constant(0.0)

    @classmethod
    def sinusoid(cls, amplitude=1.0, frequency=1.0, phase=0.0) -> "DriveTrajectory":
        a, f, p = float(amplitude), float(frequency), float(phase)
        return cls(lambda t: a * np.sin(f * t + p), label=f"{a:g}*sin({f:g}t+{p:g})")

    @classmethod
    def from_samples(cls, times, values) -> "DriveTrajectory":
        """Cubic-spline drive through sampled positions (e.g. a measured <z>(t))."""
        from scipy.interpolate import CubicSpline

        spline = CubicSpline(np.asarray(times, float), np.asarray(values, float))
        return cls(lambda t: spline(t), label="samples")


@dataclass(frozen=True)
class FockVector:
    """Photon-number amplitudes ``c_n``, ``n = 0 .. N-1``."""

    amplitudes: np.ndarray

    def __post_init__(self):
        amp = np.asarray(self.amplitudes, dtype=complex)
        if amp.ndim != 1 or amp.size < 2:
            raise ValidationError("FockVector needs a 1-D amplitude array with N >= 2")
        if not np.all(np.isfinite(amp)):
            raise ValidationError("FockVector amplitudes must be finite")
        object.__setattr__(self, "amplitudes", amp)

    @property
    def truncation(self) -> int:
        return self.amplitudes.size

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def occupations(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def edge_occupancy(self, levels: int = 2) -> float:
        p = self.occupations()
        return float(p[-levels:].sum() / p.sum())

    def mean_a(self) -> complex:
        c = self.amplitudes
        n = np.arange(1, c.size)
        return complex(np.vdot(c[:-1], np.sqrt(n) * c[1:]) / np.vdot(c, c).real)

    @classmethod
    def vacuum(cls, n_levels: int) -> "FockVector":
        v = np.zeros(n_levels, complex)
        v[0] = 1.0
        return cls(v)

    @classmethod
    def coherent(cls, alpha: complex, n_levels: int) -> "FockVector":
        return cls(coherent_state(alpha, n_levels))


@dataclass(frozen=True)
class InvariantSnapshot:
    """Matrix of ``I = a^+a - G a^+ - G* a + chi`` at one time, with its scalars."""

    t: float
    matrix: np.ndarray
    amplitude: complex
    chi: float

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.matrix)


# --------------------------------------------------------------------- operators

def _check_levels(n_levels: int, minimum: int = 2) -> int:
    if int(n_levels) != n_levels or n_levels < minimum:
        raise ValidationError(f"truncation N must be an integer >= {minimum}, got {n_levels}")
    return int(n_levels)


def annihilation(n_levels: int) -> np.ndarray:
    """Truncated ``a`` with ``<n-1|a|n> = sqrt(n)``."""
    n_levels = _check_levels(n_levels)
    return np.diag(np.sqrt(np.arange(1, n_levels, dtype=float)), 1).astype(complex)


def coherent_state(alpha: complex, n_levels: int) -> np.ndarray:
    """First ``n_levels`` amplitudes of the normalised coherent state ``|alpha>``."""
    n = np.arange(_check_levels(n_levels))
    alpha = complex(alpha)
    if alpha == 0:
        out = np.zeros(n.size, complex)
        out[0] = 1.0
        return out
    logmag = -0.5 * abs(alpha) ** 2 + n * math.log(abs(alpha)) - 0.5 * gammaln(n + 1)
    return np.exp(logmag + 1j * n * np.angle(alpha))


def coherent_edge_occupancy(alpha: complex, n_levels: int, levels: int = 2) -> float:
    """Relative weight of the top ``levels`` Fock states in the truncated ``|alpha>``."""
    p = np.abs(coherent_state(alpha, n_levels)) ** 2
    return float(p[-levels:].sum() / p.sum())


def check_truncation(amplitudes, n_levels: int, threshold: float = TRUNCATION_THRESHOLD):
    """Raise TruncationError if any amplitude over-populates the top two levels."""
    amps = np.atleast_1d(np.asarray(amplitudes, complex))
    worst = max(coherent_edge_occupancy(a, n_levels) for a in amps[np.argsort(-np.abs(amps))[:3]])
    if worst > threshold:
        raise TruncationError(
            f"top-two Fock occupancy {worst:.3e} exceeds {threshold:.0e} at N={n_levels} "
            f"(max |G| = {np.abs(amps).max():.3g}); increase N"
        )
    return worst


def drive_coupling(params: PhysParams, u: DriveTrajectory, t):
    """``g(t) = -i S u(t)``."""
    return -1j * coupling_strength(params) * u(t)


def h0_matrix(params: PhysParams, u: DriveTrajectory, t: float, n_levels: int) -> np.ndarray:
    """``w a^+a + g a + g* a^+`` in the first ``n_levels`` number states."""
    n_levels = _check_levels(n_levels)
    a = annihilation(n_levels)
    g = complex(drive_coupling(params, u, float(t)))
    return params.omega * np.diag(np.arange(n_levels, dtype=complex)) + g * a + np.conj(g) * a.conj().T


def invariant_matrix(amplitude: complex, chi: float, n_levels: int) -> np.ndarray:
    n_levels = _check_levels(n_levels)
    a = annihilation(n_levels)
    ad = a.conj().T
    G = complex(amplitude)
    return np.diag(np.arange(n_levels, dtype=complex)) - G * ad - np.conj(G) * a + chi * np.eye(n_levels)


# ------------------------------------------------------------------- quadrature

def _richardson(estimate: Callable[[int], np.ndarray], n0: int, tol: float, what: str,
                floor: float = 1.0):
    """Romberg extrapolation of a trapezoid-type estimate with h^2 error expansion.

    Converged when successive diagonals differ by less than ``tol`` times the
    larger of ``floor`` and the result; ``floor`` should reflect the size of the
    summed terms so that cancellation does not ask for accuracy below rounding.
    """
    table = [np.asarray(estimate(n0), dtype=complex)]
    n = n0
    for level in range(1, _ROMBERG_MAX_LEVELS):
        n *= 2
        row = [np.asarray(estimate(n), dtype=complex)]
        for k in range(1, level + 1):
            fac = 4.0 ** k
            row.append(row[k - 1] + (row[k - 1] - table[k - 1]) / (fac - 1.0))
        scale = max(floor, float(np.max(np.abs(row[-1]))))
        if np.max(np.abs(row[-1] - table[-1])) <= tol * scale and level >= 2:
            return row[-1]
        table = row
    raise ResolutionError(f"{what}: trapezoid step-halving did not converge")


def _base_intervals(params: PhysParams, t: float, dt_quad: float) -> int:
    if not dt_quad > 0:
        raise ValidationError("dt_quad must be > 0")
    if params.omega * dt_quad >= OSCILLATION_LIMIT:
        raise ResolutionError(
            f"omega*dt_quad = {params.omega * dt_quad:.3g} exceeds the oscillation guard "
            f"{OSCILLATION_LIMIT}; reduce dt_quad"
        )
    return max(2, int(math.ceil(abs(t) / dt_quad)))


def _amplitude_and_phase(params, u, g0, t, dt_quad, want_phase):
    S = coupling_strength(params)
    w = params.omega
    g0 = complex(g0)
    t = float(t)
    if t == 0.0:
        return g0, 0.0
    if t < 0:
        raise ValidationError("t must be >= 0")

    def estimate(n):
        s = np.linspace(0.0, t, n + 1)
        h = t / n
        f = np.exp(1j * w * s) * u(s)
        cum = np.concatenate(([0.0], np.cumsum(0.5 * h * (f[1:] + f[:-1]))))
        G = np.exp(-1j * w * s) * (g0 + S * cum)
        if not want_phase:
            return np.array([G[-1]])
        integrand = u(s) * G.imag
        phi = -S * h * (integrand.sum() - 0.5 * (integrand[0] + integrand[-1]))
        return np.array([G[-1], phi])

    n0 = _base_intervals(params, t, dt_quad)
    umax = float(np.abs(u(np.linspace(0.0, t, n0 + 1))).max())
    floor = 1.0 + abs(g0) + S * t * umax
    if want_phase:
        floor *= 1.0 + S * t * umax
    res = _richardson(estimate, n0, _ROMBERG_TOL, "coherent amplitude", floor)
    if want_phase:
        return complex(res[0]), float(res[1].real)
    return complex(res[0]), None


def coherent_amplitude(params: PhysParams, u: DriveTrajectory, g0: complex, t: float,
                       dt_quad: float = 1e-2) -> complex:
    """Coherent amplitude G(t) by Romberg-accelerated composite trapezoid."""
    return _amplitude_and_phase(params, u, g0, t, dt_quad, False)[0]


def coherent_amplitude_static(params: PhysParams, z: float, g0: complex, t: float) -> complex:
    """Closed form of G(t) for a particle held at fixed ``z``."""
    S = coupling_strength(params)
    w = params.omega
    return complex(g0) * np.exp(-1j * w * t) + (2 * S / w) * np.exp(-0.5j * w * t) * np.sin(0.5 * w * t) * z


def berry_phase(params: PhysParams, u: DriveTrajectory, g0: complex, t: float,
                dt_quad: float = 1e-2) -> float:
    """Phase ``Phi0(t) = -int_0^t Re(g G) dt'`` (nested trapezoid, Romberg-extrapolated)."""
    return _amplitude_and_phase(params, u, g0, t, dt_quad, True)[1]


def eta_phase(params: PhysParams, alpha: complex, u: DriveTrajectory, t: float,
              dt_quad: float = 1e-2):
    """Amplitude and phase carried by the coherent component ``|alpha>`` of a general field state.

    Returns ``(eta, phi)`` with

        eta = alpha e^{-iwt} + S e^{-iwt} int_0^t e^{iwt'} u dt'
        phi = S int_0^t Re(i alpha e^{-iwt'} u) dt'
              + S^2 int_0^t dt' int_0^t' ds Re(i e^{-iw(t'-s)} u(t') u(s)).

    The two phase terms are integrated separately (driving term and the
    self-interaction double integral).
    """
    S = coupling_strength(params)
    w = params.omega
    alpha = complex(alpha)
    t = float(t)
    if t == 0.0:
        return alpha, 0.0

    def estimate(n):
        s = np.linspace(0.0, t, n + 1)
        h = t / n
        us = u(s)
        f = np.exp(1j * w * s) * us
        cum = np.concatenate(([0.0], np.cumsum(0.5 * h * (f[1:] + f[:-1]))))
        eta = alpha * np.exp(-1j * w * t) + S * np.exp(-1j * w * t) * cum[-1]
        lin = np.real(1j * alpha * np.exp(-1j * w * s) * us)
        dbl = np.real(1j * np.exp(-1j * w * s) * us * cum)
        trap = lambda y: h * (y.sum() - 0.5 * (y[0] + y[-1]))
        return np.array([eta, S * trap(lin) + S * S * trap(dbl)])

    n0 = _base_intervals(params, t, dt_quad)
    drive = S * t * float(np.abs(u(np.linspace(0.0, t, n0 + 1))).max())
    floor = (1.0 + abs(alpha) + drive) * (1.0 + drive)
    res = _richardson(estimate, n0, _ROMBERG_TOL, "eta phase", floor)
    return complex(res[0]), float(res[1].real)


def berry_connection_a00(params: PhysParams, amplitude: complex) -> float:
    """Axial component of the ground-band connection, ``i S (G - G*) = -2 S Im G``."""
    return -2.0 * coupling_strength(params) * complex(amplitude).imag


# ----------------------------------------------------------------------- series

_GL_X, _GL_W = leggauss(10)
_GL_X = 0.5 * (_GL_X + 1.0)
_GL_W = 0.5 * _GL_W


def coherent_series(params: PhysParams, u: DriveTrajectory, g0: complex, times,
                    panel: float | None = None):
    """G and Phi0 on a sorted array of times ``>= 0``.

    Uses composite 10-point Gauss-Legendre panels accumulated from t=0; each
    sampled time is a panel boundary, so errors do not accumulate beyond the
    per-panel rule (effectively machine precision for smooth drives).
    """
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or times.size == 0:
        raise ValidationError("times must be a non-empty 1-D array")
    if times[0] < 0 or np.any(np.diff(times) < 0):
        raise ValidationError("times must be sorted and >= 0")
    S = coupling_strength(params)
    w = params.omega
    g0 = complex(g0)
    if panel is None:
        panel = 0.25 / max(w, 1.0)
    knots = np.concatenate(([0.0], times))
    gaps = np.diff(knots)
    sub = np.maximum(1, np.ceil(gaps / panel).astype(int))
    sub[gaps == 0] = 0
    # panel starts and widths
    owner = np.repeat(np.arange(gaps.size), sub)
    local = np.concatenate([np.arange(k) for k in sub]) if owner.size else np.zeros(0)
    widths = (gaps / np.maximum(sub, 1))[owner]
    starts = knots[owner] + local * widths

    X = _GL_X
    Wq = _GL_W
    tau = starts[:, None] + widths[:, None] * X[None, :]                      # (P, Q)
    f_tau = np.exp(1j * w * tau) * u(tau)
    panel_int = widths * (f_tau @ Wq)                                        # int over each panel
    before = np.concatenate(([0.0], np.cumsum(panel_int)[:-1]))              # int up to panel start
    inner_nodes = starts[:, None, None] + widths[:, None, None] * X[None, :, None] * X[None, None, :]
    f_inner = np.exp(1j * w * inner_nodes) * u(inner_nodes)                   # (P, Q, Q)
    partial = widths[:, None] * X[None, :] * (f_inner @ Wq)                  # int from start to tau
    G_tau = np.exp(-1j * w * tau) * (g0 + S * (before[:, None] + partial))
    phi_panel = -S * widths * ((u(tau) * G_tau.imag) @ Wq)

    cum_int = np.concatenate(([0.0], np.cumsum(panel_int)))
    cum_phi = np.concatenate(([0.0], np.cumsum(phi_panel)))
    ends = np.cumsum(sub)                                                    # panel index after each time
    G = np.exp(-1j * w * times) * (g0 + S * cum_int[ends])
    phi = cum_phi[ends]
    return G, phi


def invariant_snapshot(params: PhysParams, u: DriveTrajectory, t: float, n_levels: int,
                       g0: complex | None = None) -> InvariantSnapshot:
    """I(t) in ``n_levels`` number states with ``chi = |G|^2`` (so ``lambda_0 = 0``)."""
    g0 = params.g0 if g0 is None else g0
    G = complex(coherent_series(params, u, g0, np.array([float(t)]))[0][0])
    chi = abs(G) ** 2
    return InvariantSnapshot(float(t), invariant_matrix(G, chi, n_levels), G, chi)


def _grid_times(grid: TimeGrid):
    if grid.n_steps < 2:
        raise ValidationError("residual checks need at least 2 grid steps (3 points)")
    return grid.times


def invariant_residual_series(params: PhysParams, u: DriveTrajectory, grid: TimeGrid,
                              n_levels: int, g0: complex | None = None):
    """Per-time ``||dI/dt + (1/i)[I, H0]||_2`` at interior grid times.

    The commutator is formed in ``N+1`` levels and restricted to the leading
    ``N x N`` block, where it coincides with the untruncated operator.
    Returns ``(interior_times, residuals, G, phi)``.
    """
    n_levels = _check_levels(n_levels, minimum=4)
    g0 = params.g0 if g0 is None else g0
    times = _grid_times(grid)
    G, phi = coherent_series(params, u, g0, times)
    check_truncation(G, n_levels)
    chi = np.abs(G) ** 2
    dt = grid.dt
    big = n_levels + 1
    res = np.empty(times.size - 2)
    for k in range(1, times.size - 1):
        dI = (invariant_matrix(G[k + 1], chi[k + 1], big) - invariant_matrix(G[k - 1], chi[k - 1], big)) / (2 * dt)
        I = invariant_matrix(G[k], chi[k], big)
        H = h0_matrix(params, u, times[k], big)
        R = (dI - 1j * (I @ H - H @ I))[:n_levels, :n_levels]
        res[k - 1] = np.linalg.norm(R, 2)
    return times[1:-1], res, G, phi


def invariant_residual(params: PhysParams, u: DriveTrajectory, grid: TimeGrid, n_levels: int,
                       g0: complex | None = None) -> float:
    """Maximum invariant-equation residual over the interior of ``grid``."""
    return float(invariant_residual_series(params, u, grid, n_levels, g0)[1].max())


def tdse_residual_series(params: PhysParams, u: DriveTrajectory, grid: TimeGrid, n_levels: int,
                         g0: complex | None = None):
    """Per-time ``||(i d/dt - H0) e^{i Phi0}|G>||`` at interior grid times.

    Returns ``(interior_times, residuals, G, phi)``.
    """
    n_levels = _check_levels(n_levels, minimum=2)
    g0 = params.g0 if g0 is None else g0
    times = _grid_times(grid)
    G, phi = coherent_series(params, u, g0, times)
    check_truncation(G, n_levels)
    big = n_levels + 1
    states = np.array([np.exp(1j * p) * coherent_state(a, big) for a, p in zip(G, phi)])
    dt = grid.dt
    res = np.empty(times.size - 2)
    for k in range(1, times.size - 1):
        lhs = 1j * (states[k + 1] - states[k - 1]) / (2 * dt)
        r = lhs - h0_matrix(params, u, times[k], big) @ states[k]
        res[k - 1] = np.linalg.norm(r[:n_levels])
    return times[1:-1], res, G, phi


def tdse_residual_coherent(params: PhysParams, u: DriveTrajectory, grid: TimeGrid,
                           n_levels: int, g0: complex | None = None) -> float:
    """Maximum Schrodinger residual of the phased coherent state over the grid interior."""
    return float(tdse_residual_series(params, u, grid, n_levels, g0)[1].max())
