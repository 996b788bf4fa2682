"""Wavepackets and their propagation with the closed-form kernels."""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.integrate import solve_ivp

from . import axial as _axial
from . import field as _field
from . import magnetic as _mag
from .core import PhysParams, SpatialGrid1D, SpatialGrid2D
from .errors import PhaseResolution, ValidationError, WindowTooSmall

WINDOW_TOL = 1e-8
PHASE_STEP_LIMIT = math.pi / 4


# ------------------------------------------------------------------- packets

@dataclass(frozen=True)
class Gaussian1D:
    """``exp(-A z^2 + B z + C)`` with complex coefficients, Re A > 0."""

    A: complex
    B: complex
    C: complex

    def __call__(self, z):
        z = np.asarray(z, float)
        return np.exp(-self.A * z * z + self.B * z + self.C)


@dataclass(frozen=True)
class Gaussian2D:
    """``exp(-r.A.r + b.r + c)`` with complex symmetric 2x2 ``A`` (Re A positive definite)."""

    A: np.ndarray
    b: np.ndarray
    c: complex

    def __call__(self, x, y):
        x, y = np.asarray(x, float), np.asarray(y, float)
        A, b = self.A, self.b
        quad = A[0, 0] * x * x + 2 * A[0, 1] * x * y + A[1, 1] * y * y
        return np.exp(-quad + b[0] * x + b[1] * y + self.c)


def _window_violation(amp: np.ndarray) -> float:
    peak = np.abs(amp).max()
    if peak == 0:
        return 0.0
    if amp.ndim == 1:
        edge = max(abs(amp[0]), abs(amp[-1]))
    else:
        edge = max(np.abs(amp[0]).max(), np.abs(amp[-1]).max(), np.abs(amp[:, 0]).max(), np.abs(amp[:, -1]).max())
    return float(edge / peak)


@dataclass(frozen=True)
class Wavepacket1D:
    grid: SpatialGrid1D
    amplitudes: np.ndarray
    gaussian: Gaussian1D | None = None

    def __post_init__(self):
        amp = np.asarray(self.amplitudes, complex)
        if amp.shape != (self.grid.n,):
            raise ValidationError("amplitudes do not match the grid")
        if not np.all(np.isfinite(amp)):
            raise ValidationError("amplitudes must be finite")
        object.__setattr__(self, "amplitudes", amp)

    @property
    def norm(self) -> float:
        return float(math.sqrt(np.sum(np.abs(self.amplitudes) ** 2) * self.grid.spacing))

    def probability(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def mean_position(self) -> float:
        p = self.probability()
        return float(np.sum(self.grid.points * p) / np.sum(p))

    def second_moment(self) -> float:
        p = self.probability()
        return float(np.sum(self.grid.points ** 2 * p) / np.sum(p))

    def mean_momentum(self) -> float:
        """Spectral estimate of <p>."""
        amp = self.amplitudes
        k = 2 * np.pi * np.fft.fftfreq(amp.size, self.grid.spacing)
        phi = np.fft.fft(amp)
        w = np.abs(phi) ** 2
        return float(np.sum(k * w) / np.sum(w))

    def window_violation(self) -> float:
        return _window_violation(self.amplitudes)

    def check_window(self, tol: float = WINDOW_TOL):
        v = self.window_violation()
        if v > tol:
            raise WindowTooSmall(f"boundary amplitude {v:.3e} of peak exceeds {tol:g}; widen the z window")

    def l2_distance(self, other: "Wavepacket1D") -> float:
        if other.grid != self.grid:
            raise ValidationError("packets live on different grids")
        return float(math.sqrt(np.sum(np.abs(self.amplitudes - other.amplitudes) ** 2) * self.grid.spacing))


@dataclass(frozen=True)
class Wavepacket2D:
    grid: SpatialGrid2D
    amplitudes: np.ndarray
    gaussian: Gaussian2D | None = None

    def __post_init__(self):
        amp = np.asarray(self.amplitudes, complex)
        if amp.shape != self.grid.shape:
            raise ValidationError("amplitudes do not match the grid")
        if not np.all(np.isfinite(amp)):
            raise ValidationError("amplitudes must be finite")
        object.__setattr__(self, "amplitudes", amp)

    @property
    def norm(self) -> float:
        return float(math.sqrt(np.sum(np.abs(self.amplitudes) ** 2) * self.grid.cell_area))

    def probability(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def centroid(self):
        X, Y = self.grid.mesh()
        p = self.probability()
        s = p.sum()
        return float((X * p).sum() / s), float((Y * p).sum() / s)

    def window_violation(self) -> float:
        return _window_violation(self.amplitudes)

    def check_window(self, tol: float = WINDOW_TOL):
        v = self.window_violation()
        if v > tol:
            raise WindowTooSmall(f"boundary amplitude {v:.3e} of peak exceeds {tol:g}; widen the xy window")

    def l2_distance(self, other: "Wavepacket2D") -> float:
        if other.grid != self.grid:
            raise ValidationError("packets live on different grids")
        return float(math.sqrt(np.sum(np.abs(self.amplitudes - other.amplitudes) ** 2) * self.grid.cell_area))


def gaussian_packet(grid, center, width: float, momentum=0.0):
    """Normalised Gaussian ``psi ~ exp(-(x - c)^2 / (4 width^2) + i k x)``.

    The density |psi|^2 has standard deviation ``width``. ``grid`` may be a
    SpatialGrid1D or SpatialGrid2D; for 2D, ``center`` and ``momentum`` are pairs.
    """
    if not width > 0:
        raise ValidationError("width must be > 0")
    if isinstance(grid, SpatialGrid1D):
        if width <= 2 * grid.spacing:
            raise WindowTooSmall(f"width {width:g} must exceed twice the spacing {grid.spacing:g}")
        c, k0 = float(center), float(momentum)
        A = 1.0 / (4 * width * width)
        g = Gaussian1D(A, 2 * A * c + 1j * k0, -A * c * c - 0.25 * math.log(2 * math.pi * width * width))
        pkt = Wavepacket1D(grid, g(grid.points), g)
        pkt.check_window()
        return pkt
    if isinstance(grid, SpatialGrid2D):
        if width <= 2 * max(grid.x.spacing, grid.y.spacing):
            raise WindowTooSmall("width must exceed twice the grid spacing")
        c = np.asarray(center, float).reshape(2)
        k0 = np.broadcast_to(np.asarray(momentum, float), (2,))
        a = 1.0 / (4 * width * width)
        g = Gaussian2D(a * np.eye(2, dtype=complex), 2 * a * c + 1j * k0,
                       -a * c @ c - 0.5 * math.log(2 * math.pi * width * width))
        X, Y = grid.mesh()
        pkt = Wavepacket2D(grid, g(X, Y), g)
        pkt.check_window()
        return pkt
    raise ValidationError("grid must be a SpatialGrid1D or SpatialGrid2D")


# -------------------------------------------------------------------- axial

def _gaussian_apply_1d(qf: dict, g: Gaussian1D) -> Gaussian1D:
    D = g.A - 1j * qf["delta"]
    Bi = g.B + 1j * qf["nu"]
    A_new = -1j * qf["alpha"] + qf["beta"] ** 2 / (4 * D)
    B_new = 1j * qf["mu"] + 1j * qf["beta"] * Bi / (2 * D)
    C_new = g.C + 1j * qf["lam"] + Bi * Bi / (4 * D) + np.log(qf["pref"] * np.sqrt(math.pi / D))
    return Gaussian1D(complex(A_new), complex(B_new), complex(C_new))


def _support(amp, rel=1e-12):
    mask = np.abs(amp) > rel * np.abs(amp).max()
    idx = np.nonzero(mask)[0]
    return idx[0], idx[-1]


def propagate_z(params: PhysParams, state: _axial.AxialKernelState, pkt: Wavepacket1D, t: float,
                method: str = "quadrature", check_window: bool = True) -> Wavepacket1D:
    """Apply the axial kernel from ``state.t_start`` to ``t``.

    ``method="quadrature"`` integrates the kernel against the sampled packet
    (trapezoid); ``method="gaussian"`` uses the exact Gaussian integral and
    needs ``pkt.gaussian``. The output lives on the input grid.
    """
    if t == state.t_start:
        return pkt
    qf = state.quadratic_form(t)
    z = pkt.grid.points
    if method == "gaussian":
        if pkt.gaussian is None:
            raise ValidationError("gaussian fast path needs a packet with Gaussian metadata")
        g = _gaussian_apply_1d(qf, pkt.gaussian)
        out = Wavepacket1D(pkt.grid, g(z), g)
    elif method == "quadrature":
        lo, hi = _support(pkt.amplitudes)
        zi = z[lo:hi + 1]
        dz = pkt.grid.spacing
        grad = np.abs(qf["beta"] * np.array([z[0], z[-1]])[:, None]
                      + 2 * qf["delta"] * np.array([zi[0], zi[-1]])[None, :] + qf["nu"]).max()
        if grad * dz > PHASE_STEP_LIMIT:
            raise PhaseResolution(f"kernel phase changes by {grad * dz:.3g} rad per grid step (limit pi/4); "
                                  "refine the z grid or use the gaussian path")
        phase = (qf["alpha"] * z * z + qf["mu"] * z)[:, None] + (qf["beta"] * z[:, None] * zi[None, :]) \
            + (qf["delta"] * zi * zi + qf["nu"] * zi)[None, :] + qf["lam"]
        w = np.full(zi.size, dz)
        if lo == 0:
            w[0] *= 0.5
        if hi == z.size - 1:
            w[-1] *= 0.5
        amp = qf["pref"] * (np.exp(1j * phase) @ (w * pkt.amplitudes[lo:hi + 1]))
        g = _gaussian_apply_1d(qf, pkt.gaussian) if pkt.gaussian is not None else None
        out = Wavepacket1D(pkt.grid, amp, g)
    else:
        raise ValidationError("method must be 'quadrature' or 'gaussian'")
    if check_window:
        out.check_window()
    return out


def restart_params(params: PhysParams, t1: float) -> PhysParams:
    """Parameters for restarting the kernel clock at ``t1``.

    The z-independent part of the field amplitude is carried over,
    ``G0 -> G0 e^{-i w t1}``; the accumulated position-dependent part is dropped.
    """
    return params.replace(g0=params.g0 * np.exp(-1j * params.omega * t1))


def propagate_z_legs(params: PhysParams, pkt: Wavepacket1D, times, dt: float = 1e-3,
                     convention: str = "translated", method: str = "quadrature") -> Wavepacket1D:
    """Compose kernel propagation over consecutive legs ``0 = t0 < t1 < ... < tn``.

    ``convention="translated"`` builds each leg's kernel on the absolute clock
    from the leg's start time (exact composition). ``convention="restart"``
    resets the clock at each leg and re-seeds G0 through :func:`restart_params`.
    """
    times = [float(x) for x in times]
    if any(b <= a for a, b in zip(times, times[1:])):
        raise ValidationError("leg times must increase")
    out = pkt
    for a, b in zip(times, times[1:]):
        if convention == "translated":
            st = _axial.build_axial_kernel(params, b, dt, t_start=a)
            out = propagate_z(params, st, out, b, method)
        elif convention == "restart":
            p2 = restart_params(params, a)
            st = _axial.build_axial_kernel(p2, b - a, dt)
            out = propagate_z(p2, st, out, b - a, method)
        else:
            raise ValidationError("convention must be 'translated' or 'restart'")
    return out


def axial_mean_trajectory(params: PhysParams, z0: float, p0: float, t: float, t_start: float = 0.0):
    """Ehrenfest path of (<z>, <p>) under the axial Hamiltonian (exact for quadratic H).

    Returns a dense solution callable ``sol(t) -> (z, p)``.
    """
    m = params.mass

    def rhs(s, y):
        c = _axial.axial_coeffs(params, s)
        z, p = y
        return [p / m + 2 * c.psi * z + c.e, -2 * c.psi * p - m * c.omega2 * z - c.f]

    if t == t_start:
        return lambda s: np.array([z0, p0])
    sol = solve_ivp(rhs, (t_start, t), [z0, p0], method="DOP853", rtol=1e-12, atol=1e-12, dense_output=True)
    return sol.sol


# ------------------------------------------------------------------------ xy

def _gaussian_apply_2d(pref: complex, a: float, b: float, g: Gaussian2D) -> Gaussian2D:
    M = g.A - 1j * a * np.eye(2)
    L = 1j * np.array([[-2 * a, b], [-b, -2 * a]])
    Minv = np.linalg.inv(M)
    A_new = -1j * a * np.eye(2) - 0.25 * (L.T @ Minv @ L)
    A_new = 0.5 * (A_new + A_new.T)
    b_new = 0.5 * (L.T @ Minv @ g.b)
    sqrt_det = np.prod(np.sqrt(np.linalg.eigvals(M)))
    c_new = g.c + 0.25 * g.b @ Minv @ g.b + np.log(pref * math.pi / sqrt_det)
    return Gaussian2D(A_new, b_new, complex(c_new))


def propagate_xy(params: PhysParams, pkt: Wavepacket2D, t: float, method: str = "quadrature",
                 check_window: bool = True) -> Wavepacket2D:
    """Apply the Landau kernel (free kernel when H = 0) for a time ``t``."""
    if t == 0:
        return pkt
    w1 = _mag.cyclotron_frequency(params)
    pref, a, b = _mag.kxy_coefficients(params.mass, w1, t)
    X, Y = pkt.grid.mesh()
    if method == "gaussian":
        if pkt.gaussian is None:
            raise ValidationError("gaussian fast path needs a packet with Gaussian metadata")
        g = _gaussian_apply_2d(pref, a, b, pkt.gaussian)
        out = Wavepacket2D(pkt.grid, g(X, Y), g)
    elif method == "quadrature":
        x, y = pkt.grid.x.points, pkt.grid.y.points
        hx, hy = pkt.grid.x.spacing, pkt.grid.y.spacing
        span_x = np.abs(x).max() + np.abs(x).max()
        span_y = np.abs(y).max() + np.abs(y).max()
        grad = max((2 * abs(a) * span_x + abs(b) * np.abs(y).max()) * hx,
                   (2 * abs(a) * span_y + abs(b) * np.abs(x).max()) * hy)
        if grad > PHASE_STEP_LIMIT:
            raise PhaseResolution(f"kernel phase changes by {grad:.3g} rad per grid step (limit pi/4)")
        psi0 = pkt.amplitudes * (hx * hy)
        out_amp = np.empty_like(pkt.amplitudes)
        # K = pref * [e^{ia(xf-xi)^2 + ib yf xi}] * [e^{ia(yf-yj)^2 - ib xf yj}]
        Ay = np.exp(1j * a * (y[:, None] - y[None, :]) ** 2)              # (yf, yj)
        for i, xf in enumerate(x):
            Ax = np.exp(1j * a * (xf - x)[None, :] ** 2 + 1j * b * y[:, None] * x[None, :])  # (yf, xi)
            By = Ay * np.exp(-1j * b * xf * y)[None, :]                   # (yf, yj)
            out_amp[i] = np.einsum("fj,fj->f", Ax @ psi0, By)
        out_amp *= pref
        g = _gaussian_apply_2d(pref, a, b, pkt.gaussian) if pkt.gaussian is not None else None
        out = Wavepacket2D(pkt.grid, out_amp, g)
    else:
        raise ValidationError("method must be 'quadrature' or 'gaussian'")
    if check_window:
        out.check_window()
    return out


# ------------------------------------------------------------------ full state

@dataclass(frozen=True)
class FullState:
    """Separable state: xy packet x z packet x coherent field |G> x global phase."""

    packet_xy: Wavepacket2D
    packet_z: Wavepacket1D
    field_amplitude: complex
    global_phase: float
    t: float = 0.0

    @property
    def norm(self) -> float:
        return self.packet_xy.norm * self.packet_z.norm


def evolve_full(params: PhysParams, initial: FullState, t: float, dt_quad: float = 1e-2,
                method: str = "quadrature", kernel_dt: float = 1e-3,
                kernel_state: _axial.AxialKernelState | None = None) -> FullState:
    """Evolve every factor of a separable state from ``initial.t`` by a time ``t``.

    The field amplitude and phase are driven by the Ehrenfest ``<z>(t)`` of the
    axial packet through the full integral form of G (which reduces to the
    static closed form for a stationary packet). ``params.g0`` must equal the
    field amplitude at the kernel's clock origin; when ``initial.t == 0`` the
    initial field amplitude is used.
    """
    if t < 0:
        raise ValidationError("t must be >= 0")
    if t == 0:
        return initial
    t0 = initial.t
    if t0 == 0:
        params = params.replace(g0=initial.field_amplitude)
    t1 = t0 + t
    if kernel_state is None:
        kernel_state = _axial.build_axial_kernel(params, t1, kernel_dt, t_start=t0)
    pz = propagate_z(params, kernel_state, initial.packet_z, t1, method)
    pxy = propagate_xy(params, initial.packet_xy, t, method)

    z0 = initial.packet_z.mean_position()
    p0 = initial.packet_z.mean_momentum()
    traj = axial_mean_trajectory(params, z0, p0, t1, t0)
    drive = _field.DriveTrajectory(lambda s: traj(np.clip(s + t0, t0, t1))[0], label="<z>(t)")
    G, dphi = _field._amplitude_and_phase(params, drive, initial.field_amplitude, t, dt_quad, True)
    return replace(initial, packet_xy=pxy, packet_z=pz, field_amplitude=G,
                   global_phase=initial.global_phase + dphi, t=t1)
