"""Grid and grid-times-Fock integrators used as independent ground truth.

* ``cn_evolve_z``: Cayley (Crank-Nicolson) steps of the axial Hamiltonian,
  with coefficients expanded directly from ``(p + 2 S Im G(z, t))^2/2m + S^2/2m``.
* ``grid_evolve_xy``: Strang splitting of kinetic and harmonic parts plus an
  exact three-shear rotation for the ``y px - x py`` term (FFT based).
* ``fock_grid_evolve``: the z degree of freedom coupled to the photon mode,
  ``p^2/2m + w a^+a + S z P`` with ``P = i(a^+ - a)``, by Strang splitting.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from . import _backend
from . import field as _field
from . import magnetic as _mag
from .core import PhysParams, SpatialGrid1D, TimeGrid, coupling_strength
from .errors import (CoherentKernelError, ResolutionError, TruncationError, ValidationError)
from .evolution import Wavepacket1D, Wavepacket2D

log = logging.getLogger(__name__)

ROW_SUM_LIMIT = 0.5
EDGE_LIMIT = 1e-8


# ------------------------------------------------------------------ axial CN

def minimal_coupling_coeffs(params: PhysParams, t):
    """(psi, W2, e, f, h) from expanding ``(p + a0 - a1 z)^2/2m + S^2/2m``.

    ``a0 - a1 z = 2 S Im G(z, t)`` with G the static-drive amplitude, read off
    from :func:`field.coherent_amplitude_static` at z = 0 and z = 1.
    """
    S = coupling_strength(params)
    m = params.mass
    t = np.atleast_1d(np.asarray(t, float))
    G0 = np.array([_field.coherent_amplitude_static(params, 0.0, params.g0, s) for s in t])
    G1 = np.array([_field.coherent_amplitude_static(params, 1.0, params.g0, s) for s in t])
    a0 = 2 * S * G0.imag
    a1 = -2 * S * (G1 - G0).imag
    return np.column_stack([-a1 / (2 * m), a1 * a1 / (m * m), a0 / m, -a0 * a1 / m,
                            a0 * a0 / (2 * m) + S * S / (2 * m)])


def cn_row_sum_measure(params: PhysParams, z, coeffs, dt) -> float:
    """``dt * max |sum_k H_jk|`` over rows and steps for the tridiagonal axial H.

    The central-difference kinetic stencil has zero row sum; the symmetrised
    drift contributes ``-i psi``; the rest is the local potential.
    """
    z = np.asarray(z)
    m = params.mass
    psi, om2, _e, f, h = (coeffs[:, k][:, None] for k in range(5))
    pot = 0.5 * m * om2 * z[None, :] ** 2 + f * z[None, :] + h
    return float(dt * np.abs(pot - 1j * psi).max())


def cn_evolve_z(params: PhysParams, pkt: Wavepacket1D, grid: TimeGrid,
                coeff_source: str = "minimal") -> Wavepacket1D:
    """Crank-Nicolson evolution of an axial packet over ``grid`` (Dirichlet walls).

    ``coeff_source="axial"`` takes the coefficients from
    :func:`axial.axial_coeffs` instead of the independent expansion.
    """
    mids = grid.times[:-1] + 0.5 * grid.dt
    if coeff_source == "minimal":
        coeffs = minimal_coupling_coeffs(params, mids)
    elif coeff_source == "axial":
        from .axial import axial_coeffs

        coeffs = axial_coeffs(params, mids).as_array()
    else:
        raise ValidationError("coeff_source must be 'minimal' or 'axial'")
    z = pkt.grid.points
    measure = cn_row_sum_measure(params, z, coeffs, grid.dt)
    if measure >= ROW_SUM_LIMIT:
        raise ResolutionError(f"dt * max|row sum of H| = {measure:.3g} >= {ROW_SUM_LIMIT}; reduce dt")
    out = _backend.cayley_axial_steps(pkt.amplitudes, z, pkt.grid.spacing, params.mass, coeffs, grid.dt)
    return Wavepacket1D(pkt.grid, out)


# ---------------------------------------------------------------------- xy

def _shear_x(psi, kx, y, a):
    """exp(-i a y px): shift each fixed-y column in x by a*y."""
    return np.fft.ifft(np.fft.fft(psi, axis=0) * np.exp(-1j * a * kx[:, None] * y[None, :]), axis=0)


def _shear_y(psi, ky, x, a):
    """exp(-i a x py)."""
    return np.fft.ifft(np.fft.fft(psi, axis=1) * np.exp(-1j * a * x[:, None] * ky[None, :]), axis=1)


def grid_evolve_xy(params: PhysParams, pkt: Wavepacket2D, grid: TimeGrid) -> Wavepacket2D:
    """Second-order unitary evolution under the Landau Hamiltonian on a periodic FFT grid."""
    m = params.mass
    wl = _mag.larmor_frequency(params)
    gx, gy = pkt.grid.x, pkt.grid.y
    x, y = gx.points, gy.points
    kx = 2 * np.pi * np.fft.fftfreq(gx.n, gx.spacing)
    ky = 2 * np.pi * np.fft.fftfreq(gy.n, gy.spacing)
    dt = grid.dt
    X, Y = pkt.grid.mesh()
    V = 0.5 * m * wl * wl * (X * X + Y * Y)
    if dt * V.max() >= ROW_SUM_LIMIT * 1e3:
        raise ResolutionError("time step too large for the harmonic part on this window")
    half_v = np.exp(-0.5j * dt * V)
    kin = np.exp(-1j * dt * (kx[:, None] ** 2 + ky[None, :] ** 2) / (2 * m))
    theta = wl * dt
    tan_half = math.tan(0.5 * theta)
    sin_full = math.sin(theta)
    psi = pkt.amplitudes.copy()
    for _ in range(grid.n_steps):
        psi *= half_v
        psi = np.fft.ifft2(np.fft.fft2(psi) * kin)
        psi *= half_v
        if theta != 0.0:
            # exp(-i theta (y px - x py)) as three shears
            psi = _shear_x(psi, kx, y, tan_half)
            psi = _shear_y(psi, ky, x, -sin_full)
            psi = _shear_x(psi, kx, y, tan_half)
    return Wavepacket2D(pkt.grid, psi)


def energy_xy(params: PhysParams, pkt: Wavepacket2D) -> float:
    """<H_xy> evaluated spectrally."""
    m = params.mass
    wl = _mag.larmor_frequency(params)
    gx, gy = pkt.grid.x, pkt.grid.y
    kx = 2 * np.pi * np.fft.fftfreq(gx.n, gx.spacing)
    ky = 2 * np.pi * np.fft.fftfreq(gy.n, gy.spacing)
    X, Y = pkt.grid.mesh()
    psi = pkt.amplitudes
    phi = np.fft.fft2(psi)
    Hpsi = np.fft.ifft2(phi * (kx[:, None] ** 2 + ky[None, :] ** 2) / (2 * m))
    px = np.fft.ifft(np.fft.fft(psi, axis=0) * kx[:, None], axis=0)
    py = np.fft.ifft(np.fft.fft(psi, axis=1) * ky[None, :], axis=1)
    Hpsi = Hpsi + wl * (Y * px - X * py) + 0.5 * m * wl * wl * (X * X + Y * Y) * psi
    return float((np.vdot(psi, Hpsi) / np.vdot(psi, psi)).real)


# ---------------------------------------------------------------- z x Fock

@dataclass(frozen=True)
class GridFockState:
    """Amplitudes ``psi[j, n]`` on (z grid) x (number states 0..N-1)."""

    grid: SpatialGrid1D
    amplitudes: np.ndarray
    t: float
    history_t: np.ndarray
    history_z: np.ndarray
    max_edge: float

    @property
    def truncation(self) -> int:
        return self.amplitudes.shape[1]

    @property
    def norm(self) -> float:
        return float(math.sqrt(np.sum(np.abs(self.amplitudes) ** 2) * self.grid.spacing))

    def sector_norms(self) -> np.ndarray:
        """Occupation of each photon number (summed over z)."""
        return np.sum(np.abs(self.amplitudes) ** 2, axis=0) * self.grid.spacing

    def edge_occupancy(self) -> float:
        s = self.sector_norms()
        return float(s[-2:].sum() / s.sum())

    def field_density_matrix(self) -> np.ndarray:
        psi = self.amplitudes
        rho = psi.T @ psi.conj() * self.grid.spacing
        return rho / np.trace(rho).real

    def particle_density(self) -> np.ndarray:
        return np.sum(np.abs(self.amplitudes) ** 2, axis=1)

    def mean_position(self) -> float:
        p = self.particle_density()
        return float(np.sum(self.grid.points * p) / np.sum(p))

    def purity(self) -> float:
        rho = self.field_density_matrix()
        return float(np.real(np.trace(rho @ rho)))


def fock_grid_evolve(params: PhysParams, pkt: Wavepacket1D, alpha0: complex, n_levels: int,
                     grid: TimeGrid, edge_limit: float = EDGE_LIMIT, check_every: int = 10) -> GridFockState:
    """Strang-split evolution of ``psi0(z) |alpha0>`` under ``p^2/2m + w n + S z P``.

    Periodic FFT in z; the coupling is applied exactly per z node in the
    eigenbasis of the truncated ``P``. Aborts with TruncationError if the top
    two photon levels hold more than ``edge_limit`` of the norm.
    """
    n_levels = int(n_levels)
    if n_levels < 4:
        raise ValidationError("truncation N must be >= 4")
    m, w = params.mass, params.omega
    S = coupling_strength(params)
    z = pkt.grid.points
    dz = pkt.grid.spacing
    dt = grid.dt
    a = _field.annihilation(n_levels)
    P = 1j * (a.conj().T - a)
    lam, W = np.linalg.eigh(P)
    k = 2 * np.pi * np.fft.fftfreq(z.size, dz)
    n = np.arange(n_levels)
    half_free = np.exp(-0.5j * dt * (k[:, None] ** 2 / (2 * m) + w * n[None, :]))
    coupling = np.exp(-1j * dt * S * z[:, None] * lam[None, :])
    psi = pkt.amplitudes[:, None] * _field.coherent_state(alpha0, n_levels)[None, :]
    hist_t = np.empty(grid.n_steps + 1)
    hist_z = np.empty(grid.n_steps + 1)

    def mean_z(ps):
        d = np.sum(np.abs(ps) ** 2, axis=1)
        return np.sum(z * d) / np.sum(d)

    def edge(ps):
        s = np.sum(np.abs(ps) ** 2, axis=0)
        return s[-2:].sum() / s.sum()

    hist_t[0], hist_z[0] = grid.t_start, mean_z(psi)
    max_edge = edge(psi)
    Wc = W.conj()
    for step in range(1, grid.n_steps + 1):
        psi = np.fft.ifft(np.fft.fft(psi, axis=0) * half_free, axis=0)
        psi = ((psi @ Wc) * coupling) @ W.T
        psi = np.fft.ifft(np.fft.fft(psi, axis=0) * half_free, axis=0)
        hist_t[step] = grid.t_start + step * dt
        hist_z[step] = mean_z(psi)
        if step % check_every == 0 or step == grid.n_steps:
            e = edge(psi)
            max_edge = max(max_edge, e)
            if e > edge_limit:
                raise TruncationError(
                    f"Fock edge occupancy {e:.3e} exceeds {edge_limit:g} at t = {hist_t[step]:.4g} "
                    f"(N = {n_levels}, V = {params.volume:g}); increase N or shorten t")
    return GridFockState(pkt.grid, psi, float(hist_t[-1]), hist_t, hist_z, float(max_edge))


def predicted_amplitude(params: PhysParams, state: GridFockState, alpha0: complex, dt_quad: float = 1e-2):
    """G(t) driven by the recorded <z>(t) of the same evolution."""
    drive = _field.DriveTrajectory.from_samples(state.history_t - state.history_t[0], state.history_z)
    return _field.coherent_amplitude(params, drive, alpha0, state.t - state.history_t[0], dt_quad)


def coherent_fidelity(params: PhysParams, state: GridFockState, alpha0: complex, dt_quad: float = 1e-2) -> float:
    """``<G|rho_field|G>`` with G predicted from the recorded ``<z>(t)``."""
    if abs(state.norm - 1) > 1e-6:
        raise ValidationError(f"state must be normalised (norm = {state.norm:.8g})")
    G = predicted_amplitude(params, state, alpha0, dt_quad)
    v = _field.coherent_state(G, state.truncation)
    rho = state.field_density_matrix()
    return float(np.clip(np.real(np.vdot(v, rho @ v)), 0.0, 1.0))


@dataclass
class ScanRow:
    volume: float
    one_minus_fidelity: float = float("nan")
    purity: float = float("nan")
    z_mean: float = float("nan")
    max_edge: float = float("nan")
    norm_error: float = float("nan")
    error: str | None = None


def stability_scan(base_params: PhysParams, volumes, t_star: float, n_levels: int,
                   z_grid: SpatialGrid1D, dt: float, packet_width: float = 1.0,
                   packet_center: float = 0.0, packet_momentum: float = 0.0,
                   alpha0: complex | None = None, dt_quad: float = 1e-2):
    """1 - fidelity of the field with its coherent prediction at ``t_star`` for each volume.

    Returns ``(rows, strictly_decreasing)``. A failing volume records its error
    and the scan continues.
    """
    from .evolution import gaussian_packet

    alpha0 = base_params.g0 if alpha0 is None else complex(alpha0)
    pkt = gaussian_packet(z_grid, packet_center, packet_width, packet_momentum)
    grid = TimeGrid.spanning(t_star, dt)
    rows = []
    for V in volumes:
        row = ScanRow(float(V))
        try:
            p = base_params.replace(volume=float(V))
            st = fock_grid_evolve(p, pkt, alpha0, n_levels, grid)
            row.one_minus_fidelity = 1.0 - coherent_fidelity(p, st, alpha0, dt_quad)
            row.purity = st.purity()
            row.z_mean = st.mean_position()
            row.max_edge = st.max_edge
            row.norm_error = abs(st.norm - 1.0)
        except CoherentKernelError as exc:
            row.error = f"{type(exc).__name__}: {exc}"
            log.warning("stability scan V=%g failed: %s", V, row.error)
        rows.append(row)
    vals = [r.one_minus_fidelity for r in rows]
    ok = all(r.error is None for r in rows) and all(b < a for a, b in zip(vals, vals[1:]))
    return rows, ok
