"""Reference implementations of the compiled inner loops (numpy/scipy only)."""
import numpy as np
from scipy.linalg import solve_banded


def cayley_axial_steps(psi0, z, dz, mass, coeffs, dt):
    p = np.array(psi0, dtype=complex, copy=True)
    z = np.asarray(z, dtype=float)
    coeffs = np.asarray(coeffs, dtype=float)
    n = z.size
    if p.size != n:
        raise ValueError("psi0 and z must have the same length")
    if coeffs.ndim != 2 or coeffs.shape[1] != 5:
        raise ValueError("coeffs must have shape (n_steps, 5)")
    kin = 1.0 / (mass * dz * dz)
    zsum = z[:-1] + z[1:]
    tau = 0.5 * dt
    ab = np.zeros((3, n), dtype=complex)
    for ps, om2, e, f, h in coeffs:
        hd = kin + 0.5 * mass * om2 * z * z + f * z + h
        hu = -0.5 * kin - 1j * (ps * zsum + e) / (2.0 * dz)
        hl = np.conj(hu)
        rhs = (1.0 - 1j * tau * hd) * p
        rhs[:-1] -= 1j * tau * hu * p[1:]
        rhs[1:] -= 1j * tau * hl * p[:-1]
        ab[0, 1:] = 1j * tau * hu
        ab[1] = 1.0 + 1j * tau * hd
        ab[2, :-1] = 1j * tau * hl
        p = solve_banded((1, 1), ab, rhs, check_finite=False)
    return p


def rk4_linear2(p_half, q_half, h, y0):
    p_half = np.asarray(p_half, dtype=float)
    q_half = np.asarray(q_half, dtype=float)
    if p_half.shape != q_half.shape or p_half.size % 2 != 1:
        raise ValueError("coefficient samples must have odd length 2n + 1")
    n = (p_half.size - 1) // 2
    y0 = np.asarray(y0, dtype=float)
    out = np.empty((n + 1,) + y0.shape)
    out[0] = y0
    pl, ql = p_half.tolist(), q_half.tolist()
    for i, (y, v) in enumerate(y0.tolist()):
        col_y = [y]
        col_v = [v]
        for k in range(n):
            p0, q0 = pl[2 * k], ql[2 * k]
            pm, qm = pl[2 * k + 1], ql[2 * k + 1]
            p1, q1 = pl[2 * k + 2], ql[2 * k + 2]
            k1y = v
            k1v = -p0 * v - q0 * y
            k2y = v + 0.5 * h * k1v
            k2v = -pm * k2y - qm * (y + 0.5 * h * k1y)
            k3y = v + 0.5 * h * k2v
            k3v = -pm * k3y - qm * (y + 0.5 * h * k2y)
            k4y = v + h * k3v
            k4v = -p1 * k4y - q1 * (y + h * k3y)
            y = y + h * (k1y + 2.0 * k2y + 2.0 * k3y + k4y) / 6.0
            v = v + h * (k1v + 2.0 * k2v + 2.0 * k3v + k4v) / 6.0
            col_y.append(y)
            col_v.append(v)
        out[:, i, 0] = col_y
        out[:, i, 1] = col_v
    return out
