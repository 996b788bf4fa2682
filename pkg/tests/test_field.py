import math

import numpy as np
import pytest
from scipy.integrate import solve_ivp

from coherent_kernel import field
from coherent_kernel.core import PhysParams, TimeGrid
from coherent_kernel.errors import ResolutionError, TruncationError, ValidationError

P1 = PhysParams(mass=1.0, omega=1.0, volume=2 * math.pi)         # S = 1
ZERO = field.DriveTrajectory.zero()
SIN = field.DriveTrajectory.sinusoid()


def test_h0_examples():
    M = field.h0_matrix(P1, ZERO, 0.7, 3)
    assert np.allclose(M, np.diag([0, 1, 2]))
    u = field.DriveTrajectory.constant(0.8)
    M = field.h0_matrix(P1, u, 0.0, 4)
    g = -1j * 0.8
    assert M[0, 1] == pytest.approx(g) and M[1, 0] == pytest.approx(np.conj(g))
    assert M[2, 3] == pytest.approx(g * math.sqrt(3))
    for t in (0.0, 0.3, 2.1):
        M = field.h0_matrix(P1, SIN, t, 6)
        assert np.abs(M - M.conj().T).max() == 0.0
    with pytest.raises(ValidationError):
        field.h0_matrix(P1, SIN, 0.0, 1)


def test_coherent_amplitude_examples():
    g0 = 0.4 - 0.9j
    for t in (0.0, 0.5, 7.3):
        assert field.coherent_amplitude(P1, ZERO, g0, t) == pytest.approx(g0 * np.exp(-1j * t), abs=1e-14)
    assert field.coherent_amplitude(P1, SIN, g0, 0.0) == g0
    # closed-form constant-drive integral
    G = field.coherent_amplitude(P1, field.DriveTrajectory.constant(1.0), 0.0, math.pi)
    assert G == pytest.approx(-2j, abs=1e-13)


def _sin_drive_oracle(S, g0, t):
    # int_0^t e^{is} sin s ds = ((e^{2it} - 1)/(2i) - t)/(2i)  (omega = 1)
    inner = ((np.exp(2j * t) - 1) / (2j) - t) / (2j)
    return np.exp(-1j * t) * (g0 + S * inner)


def test_coherent_amplitude_sin_drive_against_closed_form():
    for t in (0.3, 3.0, 9.7):
        G = field.coherent_amplitude(P1, SIN, 0.3j, t)
        assert G == pytest.approx(_sin_drive_oracle(1.0, 0.3j, t), abs=1e-13)
    # value frozen from the closed form above
    assert field.coherent_amplitude(P1, SIN, 0.3j, 3.0) == pytest.approx(0.25401601450776107 - 1.852546497910727j,
                                                                         abs=1e-13)


def test_quadrature_converges_with_dt_quad():
    vals = [field.coherent_amplitude(P1, SIN, 0.1, 4.0, dq) for dq in (0.4, 0.1, 0.02)]
    assert abs(vals[0] - vals[2]) < 1e-12 and abs(vals[1] - vals[2]) < 1e-12


def test_oscillation_guard():
    with pytest.raises(ResolutionError):
        field.coherent_amplitude(PhysParams(1, 10.0, 1.0), SIN, 0, 1.0, dt_quad=0.06)
    with pytest.raises(ValidationError):
        field.coherent_amplitude(P1, SIN, 0, 1.0, dt_quad=0.0)


def test_static_examples():
    p = PhysParams(mass=1, omega=1.7, volume=3.0)
    assert field.coherent_amplitude_static(p, 2.0, 0.3 + 0.1j, 0.0) == 0.3 + 0.1j
    assert field.coherent_amplitude_static(p, 0.0, 0.3 + 0.1j, 1.1) == pytest.approx((0.3 + 0.1j) * np.exp(-1.87j))
    for t in (0.2, 1.0, 5.0):
        q = field.coherent_amplitude(p, field.DriveTrajectory.constant(-1.3), 0.3 + 0.1j, t, 0.05)
        assert q == pytest.approx(field.coherent_amplitude_static(p, -1.3, 0.3 + 0.1j, t), abs=1e-12)


def test_berry_phase_examples():
    assert field.berry_phase(P1, ZERO, 0.5 + 0.5j, 3.0) == 0.0
    assert field.berry_phase(PhysParams(1, 1, math.inf), SIN, 0.5, 3.0) == 0.0
    assert field.berry_phase(P1, SIN, 0.5, 0.0) == 0.0
    # (S^2 z^2/w)(t - sin(wt)/w) for constant drive, G0 = 0
    assert field.berry_phase(P1, field.DriveTrajectory.constant(1.0), 0.0, 2 * math.pi) == pytest.approx(
        2 * math.pi, abs=1e-12)
    p = PhysParams(1, 2.0, 1.3)
    S = p.coupling
    val = field.berry_phase(p, field.DriveTrajectory.constant(0.7), 0.0, 2.5, 0.05)
    assert val == pytest.approx(S * S * 0.49 / 2.0 * (2.5 - math.sin(5.0) / 2.0), abs=1e-12)


def test_berry_phase_against_ode():
    # dG/dt = -i w G + S u ; dPhi/dt = -S u Im G
    def rhs(t, y):
        G = y[0] + 1j * y[1]
        dG = -1j * G + math.sin(t)
        return [dG.real, dG.imag, -math.sin(t) * G.imag]

    sol = solve_ivp(rhs, (0, 3.0), [0.0, 0.3, 0.0], method="DOP853", rtol=1e-13, atol=1e-14)
    assert field.berry_phase(P1, SIN, 0.3j, 3.0) == pytest.approx(sol.y[2, -1], abs=1e-11)
    assert field.berry_phase(P1, SIN, 0.3j, 3.0) == pytest.approx(1.1594670349049603, abs=1e-11)


def test_eta_phase():
    p0 = PhysParams(1, 1.3, math.inf)
    eta, ph = field.eta_phase(p0, 0.2 - 1j, SIN, 2.0)
    assert eta == pytest.approx((0.2 - 1j) * np.exp(-2.6j)) and ph == 0.0
    assert field.eta_phase(P1, 0.7j, SIN, 0.0) == (0.7j, 0.0)
    for g0 in (0.0, 0.7j, 1.2 - 0.4j):
        eta, ph = field.eta_phase(P1, g0, SIN, 2.7)
        assert eta == pytest.approx(field.coherent_amplitude(P1, SIN, g0, 2.7), abs=1e-12)
        assert ph == pytest.approx(field.berry_phase(P1, SIN, g0, 2.7), abs=1e-12)


def test_berry_connection_examples():
    assert field.berry_connection_a00(P1, 1.5) == 0.0
    assert field.berry_connection_a00(P1, 1j) == pytest.approx(-2.0)
    assert field.berry_connection_a00(P1, -2j) == pytest.approx(4.0)


def test_series_matches_romberg():
    times = np.array([0.0, 0.4, 1.7, 5.2])
    G, phi = field.coherent_series(P1, SIN, 0.3 - 0.2j, times)
    for t, g, f in zip(times, G, phi):
        assert g == pytest.approx(field.coherent_amplitude(P1, SIN, 0.3 - 0.2j, t), abs=1e-13)
        assert f == pytest.approx(field.berry_phase(P1, SIN, 0.3 - 0.2j, t), abs=1e-12)
    with pytest.raises(ValidationError):
        field.coherent_series(P1, SIN, 0, [1.0, 0.5])


def test_undriven_rotation_preserves_modulus():
    G, _ = field.coherent_series(P1, ZERO, 0.8 + 0.6j, np.linspace(0, 20, 41))
    assert np.abs(np.abs(G) - 1.0).max() < 1e-14


def test_invariant_residual_trivial_case():
    grid = TimeGrid.spanning(2.0, 1e-2)
    assert field.invariant_residual(P1, ZERO, grid, 10, g0=0.0) < 1e-13
    assert field.tdse_residual_coherent(PhysParams(1, 1, math.inf), SIN, grid, 10, g0=0.0) < 1e-13


def test_invariant_residual_second_order():
    p = PhysParams(1, 1, 200 * math.pi)
    r1 = field.invariant_residual(p, SIN, TimeGrid.spanning(1.0, 4e-3), 20, g0=0.2)
    r2 = field.invariant_residual(p, SIN, TimeGrid.spanning(1.0, 2e-3), 20, g0=0.2)
    assert 3.8 < r1 / r2 < 4.2


def test_tdse_residual_second_order():
    r1 = field.tdse_residual_coherent(P1, SIN, TimeGrid.spanning(1.5, 4e-3), 30, g0=0.5)
    r2 = field.tdse_residual_coherent(P1, SIN, TimeGrid.spanning(1.5, 2e-3), 30, g0=0.5)
    assert 3.8 < r1 / r2 < 4.2


def test_printed_amplitude_sign_fails_tdse():
    # i dG/dt = w G - g* (the other sign) does not give a Schrodinger solution
    t = np.linspace(0, 1.5, 301)
    dt = t[1] - t[0]
    G_ok, phi = field.coherent_series(P1, SIN, 0.0, t)
    G_bad = -G_ok  # e^{-iwt}[G0 - S int e^{iwt'} u] with G0 = 0
    N = 31

    def residual(G, ph):
        st = np.array([np.exp(1j * f) * field.coherent_state(a, N) for a, f in zip(G, ph)])
        r = []
        for k in range(1, t.size - 1):
            lhs = 1j * (st[k + 1] - st[k - 1]) / (2 * dt)
            r.append(np.linalg.norm((lhs - field.h0_matrix(P1, SIN, t[k], N) @ st[k])[:-1]))
        return max(r)

    assert residual(G_ok, phi) < 1e-4
    assert residual(G_bad, phi) > 0.1


def test_eigenvalue_ladder():
    snap = field.invariant_snapshot(P1, SIN, 1.3, 60, g0=0.4)
    assert np.abs(snap.matrix - snap.matrix.conj().T).max() < 1e-15
    assert snap.chi == pytest.approx(abs(snap.amplitude) ** 2)
    ev = snap.eigenvalues()[:10]
    assert np.abs(ev - np.arange(10)).max() < 1e-8


def test_truncation_guard():
    grid = TimeGrid.spanning(1.0, 1e-2)
    with pytest.raises(TruncationError):
        field.invariant_residual(P1, SIN, grid, 6, g0=3.0)
    assert field.coherent_edge_occupancy(1.0, 40) < 1e-30


def test_fock_vector():
    v = field.FockVector.coherent(0.7 - 0.3j, 40)
    assert v.truncation == 40 and v.norm == pytest.approx(1.0, abs=1e-14)
    assert v.mean_a() == pytest.approx(0.7 - 0.3j, abs=1e-13)
    assert field.FockVector.vacuum(3).occupations().tolist() == [1.0, 0.0, 0.0]
    with pytest.raises(ValidationError):
        field.FockVector(np.array([1.0]))
    with pytest.raises(ValidationError):
        field.FockVector(np.array([1.0, np.nan]))


def test_drive_from_samples():
    t = np.linspace(0, 5, 501)
    u = field.DriveTrajectory.from_samples(t, np.sin(t))
    assert np.abs(u(np.array([0.3, 2.2])) - np.sin([0.3, 2.2])).max() < 1e-8
    with pytest.raises(ValidationError):
        field.DriveTrajectory(3.0)
