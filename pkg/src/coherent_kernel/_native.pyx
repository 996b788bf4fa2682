# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled inner loops. Same contracts as ``_purepy``."""
import numpy as np
cimport numpy as cnp

cnp.import_array()


def cayley_axial_steps(psi0, z, double dz, double mass, coeffs, double dt):
    """Crank-Nicolson (Cayley) steps for the tridiagonal axial Hamiltonian.

    ``coeffs[k] = (psi, omega2, e, f, h)`` evaluated at the midpoint of step k.
    Dirichlet boundaries.
    """
    cdef double complex[::1] p = np.array(psi0, dtype=np.complex128, copy=True)
    cdef const double[::1] zz = np.ascontiguousarray(z, dtype=np.float64)
    cdef const double[:, ::1] cf = np.ascontiguousarray(coeffs, dtype=np.float64)
    cdef Py_ssize_t n = zz.shape[0]
    cdef Py_ssize_t nsteps = cf.shape[0]
    if p.shape[0] != n:
        raise ValueError("psi0 and z must have the same length")
    if cf.shape[1] != 5:
        raise ValueError("coeffs must have shape (n_steps, 5)")

    hd_arr = np.empty(n, dtype=np.complex128)
    hu_arr = np.empty(n, dtype=np.complex128)
    cp_arr = np.empty(n, dtype=np.complex128)
    dp_arr = np.empty(n, dtype=np.complex128)
    cdef double complex[::1] hd = hd_arr
    cdef double complex[::1] hu = hu_arr
    cdef double complex[::1] cp = cp_arr
    cdef double complex[::1] dpv = dp_arr

    cdef double kin = 1.0 / (mass * dz * dz)
    cdef double koff = -0.5 * kin
    cdef double inv2dz = 0.5 / dz
    cdef double tau = 0.5 * dt
    cdef double complex I = 1j
    cdef double complex itau = I * tau
    cdef double ps, om2, ee, ff, hh, zj
    cdef double complex r, denom, ad, alo, aup, prev
    cdef Py_ssize_t s, j

    for s in range(nsteps):
        ps = cf[s, 0]
        om2 = cf[s, 1]
        ee = cf[s, 2]
        ff = cf[s, 3]
        hh = cf[s, 4]
        for j in range(n):
            zj = zz[j]
            hd[j] = kin + 0.5 * mass * om2 * zj * zj + ff * zj + hh
        for j in range(n - 1):
            hu[j] = koff - I * (ps * (zz[j] + zz[j + 1]) + ee) * inv2dz
        # Forward sweep, building (1 - i tau H) p on the fly.
        prev = 0.0
        for j in range(n):
            r = (1.0 - itau * hd[j]) * p[j]
            if j < n - 1:
                r = r - itau * hu[j] * p[j + 1]
            if j > 0:
                r = r - itau * hu[j - 1].conjugate() * prev
            prev = p[j]
            ad = 1.0 + itau * hd[j]
            if j == 0:
                denom = ad
                dpv[j] = r / denom
            else:
                alo = itau * hu[j - 1].conjugate()
                denom = ad - alo * cp[j - 1]
                dpv[j] = (r - alo * dpv[j - 1]) / denom
            if j < n - 1:
                aup = itau * hu[j]
                cp[j] = aup / denom
        p[n - 1] = dpv[n - 1]
        for j in range(n - 2, -1, -1):
            p[j] = dpv[j] - cp[j] * p[j + 1]
    return np.asarray(p)


def rk4_linear2(p_half, q_half, double h, y0):
    """Classical RK4 for y'' + p(t) y' + q(t) y = 0.

    ``p_half``/``q_half`` hold samples at ``t0 + j h / 2`` for ``j = 0 .. 2n``.
    ``y0`` has shape (M, 2) with rows (y, y'). Returns shape (n + 1, M, 2).
    """
    cdef const double[::1] pp = np.ascontiguousarray(p_half, dtype=np.float64)
    cdef const double[::1] qq = np.ascontiguousarray(q_half, dtype=np.float64)
    y0a = np.ascontiguousarray(y0, dtype=np.float64)
    if pp.shape[0] != qq.shape[0] or pp.shape[0] % 2 != 1:
        raise ValueError("coefficient samples must have odd length 2n + 1")
    cdef Py_ssize_t n = (pp.shape[0] - 1) // 2
    cdef Py_ssize_t M = y0a.shape[0]
    out_arr = np.empty((n + 1, M, 2), dtype=np.float64)
    cdef double[:, :, ::1] out = out_arr
    cdef const double[:, ::1] yi = y0a
    cdef Py_ssize_t k, i
    cdef double y, v, k1y, k1v, k2y, k2v, k3y, k3v, k4y, k4v, pm, qm
    for i in range(M):
        out[0, i, 0] = yi[i, 0]
        out[0, i, 1] = yi[i, 1]
    for i in range(M):
        y = yi[i, 0]
        v = yi[i, 1]
        for k in range(n):
            k1y = v
            k1v = -pp[2 * k] * v - qq[2 * k] * y
            pm = pp[2 * k + 1]
            qm = qq[2 * k + 1]
            k2y = v + 0.5 * h * k1v
            k2v = -pm * k2y - qm * (y + 0.5 * h * k1y)
            k3y = v + 0.5 * h * k2v
            k3v = -pm * k3y - qm * (y + 0.5 * h * k2y)
            k4y = v + h * k3v
            k4v = -pp[2 * k + 2] * k4y - qq[2 * k + 2] * (y + h * k3y)
            y = y + h * (k1y + 2.0 * k2y + 2.0 * k3y + k4y) / 6.0
            v = v + h * (k1v + 2.0 * k2v + 2.0 * k3v + k4v) / 6.0
            out[k + 1, i, 0] = y
            out[k + 1, i, 1] = v
    return out_arr
