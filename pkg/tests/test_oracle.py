import math

import numpy as np
import pytest

from coherent_kernel import axial, evolution, field, oracle
from coherent_kernel.core import PhysParams, SpatialGrid1D, SpatialGrid2D, TimeGrid
from coherent_kernel.errors import ResolutionError, TruncationError, ValidationError

P = PhysParams(mass=1.0, omega=1.0, volume=2 * math.pi, g0=0.5)
FREE = PhysParams(mass=1.0, omega=1.0, volume=math.inf)
LANDAU = FREE.replace(magnetic_field=1.0)
ZG = SpatialGrid1D.centered(0.0, 10.0, 0.02)
FOCK_Z = SpatialGrid1D.centered(0.0, 10.0, 0.05)


def _free_gaussian(z, t, sigma=1.0, m=1.0):
    s = 1 + 1j * t / (2 * m * sigma * sigma)
    return (2 * math.pi * sigma * sigma) ** -0.25 / np.sqrt(s) * np.exp(-z * z / (4 * sigma * sigma * s))


# ---------------------------------------------------------------------- CN

def test_cn_is_unitary_per_step(backend):
    pk = evolution.gaussian_packet(ZG, 0.3, 1.0, momentum=0.5)
    one = oracle.cn_evolve_z(P, pk, TimeGrid(dt=1e-3, n_steps=1))
    assert abs(one.norm - pk.norm) < 1e-12
    many = oracle.cn_evolve_z(P, pk, TimeGrid(dt=1e-3, n_steps=500))
    assert abs(many.norm - pk.norm) < 500 * 1e-12


def test_cn_free_gaussian():
    grid = SpatialGrid1D.centered(0.0, 12.0, 0.005)
    pk = evolution.gaussian_packet(grid, 0.0, 1.0)
    out = oracle.cn_evolve_z(FREE, pk, TimeGrid.spanning(1.0, 1e-4))
    err = math.sqrt(np.sum(np.abs(out.amplitudes - _free_gaussian(grid.points, 1.0)) ** 2) * grid.spacing)
    assert err < 1e-6


def test_cn_second_order_in_time():
    pk = evolution.gaussian_packet(ZG, 0.0, 1.0)
    ref = oracle.cn_evolve_z(P, pk, TimeGrid.spanning(1.0, 1e-4))
    e1 = oracle.cn_evolve_z(P, pk, TimeGrid.spanning(1.0, 4e-3)).l2_distance(ref)
    e2 = oracle.cn_evolve_z(P, pk, TimeGrid.spanning(1.0, 2e-3)).l2_distance(ref)
    assert 3.5 < e1 / e2 < 4.5


def test_cn_guard_and_coefficient_sources():
    pk = evolution.gaussian_packet(ZG, 0.0, 1.0)
    with pytest.raises(ResolutionError):
        oracle.cn_evolve_z(P, pk, TimeGrid.spanning(3.0, 1e-2))
    with pytest.raises(ValidationError):
        oracle.cn_evolve_z(P, pk, TimeGrid.spanning(1.0, 1e-3), coeff_source="other")
    grid = TimeGrid.spanning(1.0, 1e-3)
    a = oracle.cn_evolve_z(P, pk, grid)
    b = oracle.cn_evolve_z(P, pk, grid, coeff_source="axial")
    assert a.l2_distance(b) < 1e-12


def test_row_sum_measure_ignores_kinetic_stencil():
    z = ZG.points
    zero = np.zeros((3, 5))
    assert oracle.cn_row_sum_measure(FREE, z, zero, 0.1) == 0.0
    c = np.array([[-0.5, 0.0, 0.0, 0.0, 0.0]])
    assert oracle.cn_row_sum_measure(FREE, z, c, 0.1) == pytest.approx(0.05)


def test_cn_agrees_with_kernel_propagation():
    pk = evolution.gaussian_packet(ZG, 0.4, 1.0, momentum=-0.3)
    cn = oracle.cn_evolve_z(P, pk, TimeGrid.spanning(1.5, 1e-4))
    st = axial.build_axial_kernel(P, 1.5, 1e-3)
    # limited by the dz^2 error of the finite-difference oracle
    assert evolution.propagate_z(P, st, pk, 1.5, "gaussian").l2_distance(cn) < 1e-3


# ---------------------------------------------------------------------- xy

XG = SpatialGrid2D.square((0.0, 0.0), 12.0, 0.2)


def test_xy_free_spreading():
    pk = evolution.gaussian_packet(XG, (0.0, 0.0), 1.0)
    out = oracle.grid_evolve_xy(FREE, pk, TimeGrid.spanning(1.0, 1e-2))
    X, Y = XG.mesh()
    ref = _free_gaussian(X, 1.0) * _free_gaussian(Y, 1.0)
    assert math.sqrt(np.sum(np.abs(out.amplitudes - ref) ** 2) * XG.cell_area) < 1e-5


def test_xy_landau_ground_state_is_stationary():
    pk = evolution.gaussian_packet(XG, (0.0, 0.0), 1.0)
    out = oracle.grid_evolve_xy(LANDAU, pk, TimeGrid.spanning(2 * math.pi, 1e-2))
    overlap = abs(np.vdot(pk.amplitudes, out.amplitudes)) * XG.cell_area
    assert abs(overlap - 1) < 1e-4
    assert math.sqrt(np.sum((np.abs(out.amplitudes) - np.abs(pk.amplitudes)) ** 2) * XG.cell_area) < 1e-4


def test_xy_norm_over_many_steps():
    small = SpatialGrid2D.square((0.0, 0.0), 10.0, 0.4)
    pk = evolution.gaussian_packet(small, (0.0, 0.0), 1.0, momentum=(0.2, 0.0))
    out = oracle.grid_evolve_xy(LANDAU, pk, TimeGrid(dt=1e-3, n_steps=10_000))
    assert abs(out.norm - pk.norm) < 1e-8


def test_xy_energy_conservation():
    pk = evolution.gaussian_packet(XG, (1.5, 0.0), 1.0, momentum=(0.3, 0.2))
    e0 = oracle.energy_xy(LANDAU, pk)
    out = oracle.grid_evolve_xy(LANDAU, pk, TimeGrid.spanning(3.0, 5e-3))
    assert abs(oracle.energy_xy(LANDAU, out) - e0) < 1e-6 * max(1.0, abs(e0))


def test_xy_converges_to_kernel_at_second_order():
    pk = evolution.gaussian_packet(XG, (1.5, 0.0), 1.0, momentum=(0.3, 0.2))
    ref = evolution.propagate_xy(LANDAU, pk, 3.0, method="gaussian")
    e = [oracle.grid_evolve_xy(LANDAU, pk, TimeGrid.spanning(3.0, d)).l2_distance(ref) for d in (0.04, 0.02)]
    assert e[1] < 2e-5
    assert 3.5 < e[0] / e[1] < 4.5


# ------------------------------------------------------------------- z x Fock

@pytest.fixture(scope="module")
def z_packet():
    return evolution.gaussian_packet(FOCK_Z, 0.0, 1.0)


def test_fock_uncoupled_field_stays_coherent(z_packet):
    st = oracle.fock_grid_evolve(FREE, z_packet, 0.5, 12, TimeGrid.spanning(2.0, 1e-2))
    assert abs(1 - oracle.coherent_fidelity(FREE, st, 0.5)) < 1e-8
    assert abs(st.norm - 1) < 1e-10
    assert oracle.predicted_amplitude(FREE, st, 0.5) == pytest.approx(0.5 * np.exp(-2j), abs=1e-12)
    # density of the particle spreads freely
    ref = np.abs(_free_gaussian(FOCK_Z.points, 2.0)) ** 2
    assert np.abs(st.particle_density() - ref).max() < 1e-8


def test_fock_initial_state_fidelity(z_packet):
    st = oracle.fock_grid_evolve(P, z_packet, 0.3 - 0.2j, 16, TimeGrid(dt=1e-3, n_steps=1))
    assert oracle.coherent_fidelity(P, st, 0.3 - 0.2j) == pytest.approx(1.0, abs=1e-5)
    rho = st.field_density_matrix()
    assert np.abs(rho - rho.conj().T).max() < 1e-14
    assert st.purity() == pytest.approx(1.0, abs=1e-5)


def test_fock_weak_coupling_example(z_packet):
    p = PhysParams(mass=1.0, omega=1.0, volume=100.0)
    st = oracle.fock_grid_evolve(p, z_packet, 0.0, 24, TimeGrid.spanning(math.pi, 5e-3))
    assert abs(st.norm - 1) < 1e-8
    assert st.max_edge < 1e-8
    assert st.edge_occupancy() < 1e-8
    assert st.sector_norms().sum() == pytest.approx(1.0, abs=1e-8)


def test_fock_truncation_guard(z_packet):
    with pytest.raises(TruncationError):
        oracle.fock_grid_evolve(PhysParams(mass=1.0, omega=1.0, volume=1.0), z_packet, 1.0, 6,
                                TimeGrid.spanning(1.0, 1e-2))
    with pytest.raises(ValidationError):
        oracle.fock_grid_evolve(P, z_packet, 0.0, 3, TimeGrid.spanning(1.0, 1e-2))


def test_fock_unnormalised_state_rejected(z_packet):
    st = oracle.fock_grid_evolve(FREE, z_packet, 0.0, 8, TimeGrid(dt=1e-2, n_steps=2))
    bad = oracle.GridFockState(st.grid, 2 * st.amplitudes, st.t, st.history_t, st.history_z, st.max_edge)
    with pytest.raises(ValidationError):
        oracle.coherent_fidelity(FREE, bad, 0.0)


def test_fock_marginal_approaches_axial_crank_nicolson_as_volume_grows(z_packet):
    # the marginals differ at first order in S, so the gap shrinks like V^(-1/2)
    gaps = []
    for V in (1e3, 1e4, 1e5):
        p = PhysParams(mass=4.0, omega=1.0, volume=V, g0=0.5)
        st = oracle.fock_grid_evolve(p, z_packet, 0.5, 16, TimeGrid.spanning(2.0, 5e-3))
        cn = oracle.cn_evolve_z(p, z_packet, TimeGrid.spanning(2.0, 1e-3))
        gaps.append(math.sqrt(np.sum((st.particle_density() - cn.probability()) ** 2) * FOCK_Z.spacing))
    assert gaps[0] > gaps[1] > gaps[2]
    for a, b in zip(gaps, gaps[1:]):
        assert 2.5 < a / b < 4.0
    assert gaps[2] < 5e-3


def test_stability_scan_single_volume_and_uncoupled_column():
    base = PhysParams(mass=4.0, omega=1.0, volume=1e3)
    rows, ok = oracle.stability_scan(base, [math.inf, 1e3], 1.0, 12, FOCK_Z, 1e-2)
    assert len(rows) == 2 and all(r.error is None for r in rows)
    assert rows[0].one_minus_fidelity < 1e-8
    assert rows[1].one_minus_fidelity > rows[0].one_minus_fidelity
    assert not ok                                            # fidelity loss grows as V shrinks
    assert rows[0].norm_error < 1e-10 and rows[1].max_edge < 1e-8
    rows, ok = oracle.stability_scan(base, [1e3], 1.0, 4, FOCK_Z, 1e-2, alpha0=1.5)
    assert rows[0].error.startswith("TruncationError") and not ok


def test_minimal_coupling_expansion_uses_static_amplitude():
    # the oracle expansion is built from the static-drive amplitude only
    t = 1.3
    G0 = field.coherent_amplitude_static(P, 0.0, P.g0, t)
    c = oracle.minimal_coupling_coeffs(P, t)[0]
    assert c[2] == pytest.approx(2 * P.coupling * G0.imag / P.mass, abs=1e-14)
