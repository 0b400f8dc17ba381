import numpy as np
import pytest

from bifikinetic.errors import InvalidArgumentError, StepSizeError
from bifikinetic.perturbative import (
    AcousticState,
    KernelBasis,
    MomentVector,
    PerturbativeState,
    VelocityGridR,
    acoustic_from_moments,
    acoustic_matrix,
    acoustic_moments,
    acoustic_solve,
    acoustic_step,
    bgk_max_dt,
    bgk_solve,
    bgk_step,
    characteristic_speeds,
    limit_profile,
    moments_from_h,
    pi_L,
    steady_state,
    vT_diagnostic,
)
from bifikinetic.randomspace import SpatialGrid

VG = VelocityGridR(64, 6.0)
BASIS = KernelBasis.from_grid(VG)


def l2(h, dx):
    return float(np.sqrt(dx * np.sum(VG.inner(h, h))))


# ---- velocity grid and kernel ------------------------------------------------------

def test_maxwellian_integrates_to_one():
    assert VG.inner(VG.maxwellian, np.ones(VG.n_w)) == pytest.approx(1.0, abs=1e-8)


def test_kernel_basis_orthonormal():
    G = np.array([[VG.inner(a, b) for b in BASIS.phi] for a in BASIS.phi])
    assert np.allclose(G, np.eye(3), atol=1e-10)


def test_pi_L_keeps_kernel_and_kills_complement():
    v, sm = VG.nodes, VG.sqrt_m
    k = (2 - v + 0.5 * v * v) * sm
    assert np.allclose(pi_L(k, BASIS), k, atol=1e-12)
    rng = np.random.default_rng(0)
    h = rng.standard_normal((4, VG.n_w))
    r = h - pi_L(h, BASIS)
    assert np.allclose(pi_L(r, BASIS), 0.0, atol=1e-12)


def test_pi_L_idempotent_and_self_adjoint():
    rng = np.random.default_rng(1)
    a, b = rng.standard_normal((2, 5, VG.n_w))
    pa = pi_L(a, BASIS)
    assert np.allclose(pi_L(pa, BASIS), pa, atol=1e-12)
    assert np.allclose(VG.inner(pa, b), VG.inner(a, pi_L(b, BASIS)), atol=1e-12)


# ---- kinetic model ---------------------------------------------------------------------

def test_state_validation():
    grid = SpatialGrid(4)
    with pytest.raises(InvalidArgumentError):
        PerturbativeState(np.zeros((4, VG.n_w)), grid, eps=0.0)
    with pytest.raises(InvalidArgumentError):
        PerturbativeState(np.zeros((4, VG.n_w)), grid, eps=1.0, alpha=2)


def test_uniform_nonequilibrium_contracts_by_relaxation_factor():
    grid = SpatialGrid(8)
    rng = np.random.default_rng(2)
    h0 = np.tile(rng.standard_normal(VG.n_w), (8, 1))
    st = PerturbativeState(h0, grid, eps=1.0)
    dt = bgk_max_dt(grid.dx, 1.0, 0, VG.v_max)
    out = bgk_step(st, dt, BASIS).h
    k0 = pi_L(h0, BASIS)
    assert np.allclose(pi_L(out, BASIS), k0, atol=1e-12)
    assert np.allclose(out - pi_L(out, BASIS), (h0 - k0) / (1 + dt), atol=1e-12)


def test_kinetic_model_is_dissipative():
    grid = SpatialGrid(32)
    rng = np.random.default_rng(3)
    st = PerturbativeState(rng.standard_normal((32, VG.n_w)), grid, eps=1e-3)
    dt = bgk_max_dt(grid.dx, 1e-3, 0, VG.v_max, 0.5)
    prev = l2(st.h, grid.dx)
    for _ in range(100):
        st = bgk_step(st, dt, BASIS)
        cur = l2(st.h, grid.dx)
        assert cur <= prev * (1 + 1e-14)
        prev = cur


@pytest.mark.parametrize("alpha", [0, 1])
def test_kinetic_mass_conserved(alpha):
    grid = SpatialGrid(32)
    x = grid.centers
    h0 = limit_profile(np.cos(2 * np.pi * x), np.sin(2 * np.pi * x), 0 * x, VG)
    st = PerturbativeState(h0, grid, eps=0.1, alpha=alpha)
    final, _ = bgk_solve(st, 0.05, BASIS)
    m0 = moments_from_h(st, BASIS).rho.sum()
    m1 = moments_from_h(final, BASIS).rho.sum()
    assert final.t == 0.05
    assert abs(m1 - m0) / grid.nx <= 1e-10


def test_kinetic_cfl_enforced():
    grid = SpatialGrid(8)
    st = PerturbativeState(np.zeros((8, VG.n_w)), grid, eps=1.0)
    with pytest.raises(StepSizeError):
        bgk_step(st, 2 * bgk_max_dt(grid.dx, 1.0, 0, VG.v_max), BASIS)


def test_recording_lands_on_requested_times():
    grid = SpatialGrid(8)
    st = PerturbativeState(np.zeros((8, VG.n_w)), grid, eps=1.0)
    _, traj = bgk_solve(st, 0.1, BASIS, record=[0.0, 0.03, 0.1])
    assert [s.t for s in traj] == [0.0, 0.03, 0.1]


# ---- moments ------------------------------------------------------------------------

def test_steady_state_moments():
    assert steady_state(1) == (1.0, 0.0, 0.5)
    assert steady_state(3) == (1.0, 0.0, 1.5)


def test_moments_of_zero_perturbation():
    st = PerturbativeState(np.zeros((3, VG.n_w)), SpatialGrid(3), eps=1.0)
    m = moments_from_h(st, BASIS)
    assert np.allclose(m.stack(), np.array([[1.0], [0.0], [0.5]]) * np.ones(3), atol=0)


def test_moments_of_limit_profile():
    # <(1, v, v^2/2) M, (rho + v u + (v^2 - 1) T / 2)> = (rho, u, (rho + T) / 2)
    # the grid truncates the Maxwellian tails at |v| = 6, hence 1e-6
    grid = SpatialGrid(2)
    h = limit_profile([0.3, -0.1], [0.2, 0.4], [0.5, 0.0], VG)
    m = moments_from_h(PerturbativeState(h, grid, 1.0, delta=1.0), BASIS)
    assert np.allclose(m.rho, [1.3, 0.9], atol=1e-6)
    assert np.allclose(m.m, [0.2, 0.4], atol=1e-6)
    assert np.allclose(m.E, [0.5 + 0.15 + 0.25, 0.5 - 0.05], atol=1e-6)


# ---- acoustic system ---------------------------------------------------------------

def test_characteristic_speeds():
    assert np.allclose(characteristic_speeds(1), [-np.sqrt(3), 0.0, np.sqrt(3)], atol=1e-14)
    lam = np.linalg.eigvals(acoustic_matrix(3)).real
    assert np.allclose(np.sort(lam), [-np.sqrt(5 / 3), 0.0, np.sqrt(5 / 3)], atol=1e-14)


def test_acoustic_conservation():
    grid = SpatialGrid(40)
    x = grid.centers
    st = AcousticState(np.cos(2 * np.pi * x), np.sin(4 * np.pi * x), 0.3 * np.cos(2 * np.pi * x), grid)
    q0 = st.q.sum(axis=1)
    final, _ = acoustic_solve(st, 0.2)
    assert np.abs(final.q.sum(axis=1) - q0).max() <= 1e-13 * grid.nx


def test_acoustic_cfl_enforced():
    grid = SpatialGrid(10)
    st = AcousticState(np.zeros(10), np.zeros(10), np.zeros(10), grid)
    with pytest.raises(StepSizeError):
        acoustic_step(st, 1.1 * grid.dx / np.sqrt(3), c_cfl=1.0)
    with pytest.raises(InvalidArgumentError):
        AcousticState(np.zeros(10), np.zeros(10), np.zeros(10), grid, d_v=0)


def test_acoustic_moments_round_trip():
    grid = SpatialGrid(5)
    rng = np.random.default_rng(4)
    st = AcousticState(*rng.standard_normal((3, 5)), grid)
    back = acoustic_from_moments(acoustic_moments(st, 1e-2), 1e-2, grid)
    assert np.allclose(back.q, st.q, atol=1e-9)


def test_acoustic_moments_match_kinetic_to_first_order():
    grid = SpatialGrid(3)
    rho, u, T = np.array([0.2, -0.3, 0.1]), np.array([0.5, 0.0, -0.2]), np.array([0.1, 0.4, 0.0])
    delta = 1e-4
    kin = moments_from_h(PerturbativeState(limit_profile(rho, u, T, VG), grid, 1.0, delta=delta), BASIS)
    ac = acoustic_moments(AcousticState(rho, u, T, grid), delta)
    assert np.abs(kin.stack() - ac.stack()).max() <= 10 * delta**2


def test_moment_vector_stack():
    m = MomentVector(np.ones(2), np.zeros(2), 2 * np.ones(2))
    assert m.stack().shape == (3, 2)


# ---- limit profile and V_T ----------------------------------------------------------

def test_limit_profile_lies_in_kernel():
    rng = np.random.default_rng(5)
    h = limit_profile(*rng.standard_normal((3, 6)), VG)
    assert np.allclose(pi_L(h, BASIS), h, atol=1e-12)


def test_limit_profile_shape_mismatch():
    with pytest.raises(InvalidArgumentError):
        limit_profile(np.zeros(3), np.zeros(2), np.zeros(3), VG)


def test_vT_examples():
    a = np.zeros((4, VG.n_w))
    b = np.tile(VG.sqrt_m, (4, 1))
    assert vT_diagnostic([(0.0, a)], [(0.0, a)], VG) == 0.0
    # ||sqrt(M)||_{L2_v} = 1
    assert vT_diagnostic([(0.0, a), (1.0, a)], [(0.0, a), (1.0, 2 * b)], VG) == pytest.approx(2.0, abs=1e-8)
    with pytest.raises(InvalidArgumentError):
        vT_diagnostic([(0.0, a)], [(0.5, a)], VG)
    with pytest.raises(InvalidArgumentError):
        vT_diagnostic([], [], VG)
