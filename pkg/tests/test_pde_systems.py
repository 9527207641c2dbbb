import numpy as np
import pytest

from entroader.errors import StateError
from entroader.pde_systems import (AdvectionSystem, EulerSystem, PdeSystem,
                                   ShallowWaterSystem, make_system)

rng = np.random.default_rng(7)


def random_states(pde, n=100):
    if pde.m == 1:
        return rng.uniform(-2.0, 2.0, (n, 1))
    if pde.m == 3:
        u = np.empty((n, 3))
        u[:, 0] = rng.uniform(0.5, 2.0, n)
        u[:, 1:] = rng.uniform(-1.0, 1.0, (n, 2))
        return u
    u = np.empty((n, 4))
    u[:, 0] = rng.uniform(0.5, 2.0, n)
    u[:, 1:3] = rng.uniform(-1.0, 1.0, (n, 2))
    p = rng.uniform(0.5, 2.0, n)
    k = 0.5 * (u[:, 1] ** 2 + u[:, 2] ** 2) / u[:, 0]
    u[:, 3] = p / (pde.gamma_gas - 1.0) + k
    return u


def fd_jacobian(fn, u, eps=1e-7):
    base = np.atleast_1d(fn(u))
    J = np.zeros(base.shape + u.shape)
    for j in range(u.size):
        d = np.zeros_like(u)
        d[j] = eps * max(1.0, abs(u[j]))
        J[..., j] = (np.atleast_1d(fn(u + d)) - np.atleast_1d(fn(u - d))) / (2 * d[j])
    return J


ALL_SYSTEMS = [make_system("advection"), make_system("rotation"),
               make_system("swe"), make_system("euler")]


class TestFluxValues:
    def test_advection(self):
        pde = AdvectionSystem(a=(1.0, 0.0))
        F = pde.flux(np.array([2.0]), np.zeros(2))
        assert np.allclose(F, [[2.0, 0.0]], atol=1e-15)

    def test_shallow_water_lake_at_rest(self):
        pde = ShallowWaterSystem(g=9.81)
        F = pde.flux(np.array([1.0, 0.0, 0.0]), np.zeros(2))
        assert np.allclose(F[:, 0], [0.0, 4.905, 0.0], atol=1e-14)

    def test_euler_pressure_only(self):
        pde = EulerSystem()
        u = np.array([1.0, 0.0, 0.0, 2.5])   # rho=1, zero velocity, p=1
        assert pde.pressure(u) == pytest.approx(1.0, rel=1e-15)
        F = pde.flux(u, np.zeros(2))
        assert np.allclose(F[:, 0], [0.0, 1.0, 0.0, 0.0], atol=1e-15)


class TestWavespeeds:
    def test_rotation(self):
        pde = make_system("rotation")
        x = np.array([0.0, 1.5])
        s = pde.max_wavespeed(np.array([1.0]), np.array([1.0]),
                              np.array([1.0, 0.0]), x)
        assert s == pytest.approx(1.5, rel=1e-15)

    def test_shallow_water(self):
        pde = ShallowWaterSystem(g=9.81)
        u = np.array([1.0, 0.0, 0.0])
        s = pde.max_wavespeed(u, u, np.array([1.0, 0.0]), np.zeros(2))
        assert s == pytest.approx(np.sqrt(9.81), rel=1e-14)

    def test_euler(self):
        pde = EulerSystem()
        u = np.array([1.0, 1.0, 0.0, 2.5 + 0.5])
        s = pde.max_wavespeed(u, u, np.array([1.0, 0.0]), np.zeros(2))
        assert s == pytest.approx(1.0 + np.sqrt(1.4), rel=1e-14)


class TestEntropyAlgebra:
    def test_sw_values(self):
        pde = ShallowWaterSystem(g=9.81)
        u = np.array([1.0, 0.0, 0.0])
        assert pde.entropy(u) == pytest.approx(4.905, rel=1e-15)
        assert np.allclose(pde.entropy_vars(u), [9.81, 0.0, 0.0], atol=1e-15)
        assert np.allclose(pde.entropy_flux(u, np.zeros(2)), 0.0, atol=1e-15)

    def test_euler_values(self):
        pde = EulerSystem()
        u = np.array([1.0, 0.0, 0.0, 2.5])
        assert pde.entropy(u) == pytest.approx(-6.0, rel=1e-14)

    @pytest.mark.parametrize("pde", ALL_SYSTEMS, ids=lambda p: p.name)
    def test_entropy_vars_are_entropy_gradient(self, pde):
        for u in random_states(pde, 20):
            v_fd = fd_jacobian(pde.entropy, u)
            assert np.abs(v_fd - pde.entropy_vars(u)).max() < 1e-6

    @pytest.mark.parametrize("pde", ALL_SYSTEMS, ids=lambda p: p.name)
    def test_a0_inverts_jacobian_of_entropy_vars(self, pde):
        for u in random_states(pde, 20):
            # finite-difference oracle for dv/du
            J_fd = fd_jacobian(pde.entropy_vars, u)
            prod = pde.a0(u) @ J_fd
            assert np.abs(prod - np.eye(pde.m)).max() < 1e-6
            # and the analytic Jacobian to much tighter tolerance
            prod2 = pde.a0(u) @ pde.entropy_vars_jacobian(u)
            assert np.abs(prod2 - np.eye(pde.m)).max() < 1e-10

    @pytest.mark.parametrize("pde", ALL_SYSTEMS, ids=lambda p: p.name)
    def test_compatibility_condition(self, pde):
        # v^T dF_d/du = dG_d/du by finite differences, both directions
        x = np.array([0.4, -0.3])
        for u in random_states(pde, 100):
            v = pde.entropy_vars(u)
            for d in range(2):
                JF = fd_jacobian(lambda w: pde.flux(w, x)[..., d], u)
                JG = fd_jacobian(lambda w: pde.entropy_flux(w, x)[..., d], u)
                assert np.abs(v @ JF - JG).max() < 1e-6

    @pytest.mark.parametrize("pde", ALL_SYSTEMS, ids=lambda p: p.name)
    def test_entropy_convexity(self, pde):
        for u in random_states(pde, 20):
            H = fd_jacobian(lambda w: fd_jacobian(pde.entropy, w).ravel(), u)
            H = 0.5 * (H + H.T)
            assert np.linalg.eigvalsh(H).min() > 0

    @pytest.mark.parametrize("pde", ALL_SYSTEMS, ids=lambda p: p.name)
    def test_potential_identity(self, pde):
        x = np.array([0.2, 0.7])
        for u in random_states(pde, 50):
            v = pde.entropy_vars(u)
            F = pde.flux(u, x)
            psi = pde.entropy_potential(u, x)
            G = pde.entropy_flux(u, x)
            assert np.abs(v @ F - G - psi).max() < 1e-12

    @pytest.mark.parametrize("pde", ALL_SYSTEMS, ids=lambda p: p.name)
    def test_a0_symmetry(self, pde):
        for u in random_states(pde, 20):
            A = pde.a0(u)
            assert np.abs(A - A.T).max() < 1e-12 * max(1.0, np.abs(A).max())


class TestFluxJacobians:
    @pytest.mark.parametrize("pde", ALL_SYSTEMS, ids=lambda p: p.name)
    def test_against_finite_differences(self, pde):
        x = np.array([0.3, 0.9])
        for u in random_states(pde, 20):
            J = pde.flux_jacobian(u, x)
            for d in range(2):
                J_fd = fd_jacobian(lambda w: pde.flux(w, x)[..., d], u)
                assert np.abs(J[..., d] - J_fd).max() < 1e-6

    @pytest.mark.parametrize("pde", ALL_SYSTEMS, ids=lambda p: p.name)
    def test_flux_div_matches_jacobian_contraction(self, pde):
        u = random_states(pde, 30)
        gu = rng.normal(size=(2,) + u.shape)
        x = rng.uniform(-1, 1, u.shape[:-1] + (2,))
        ref = PdeSystem.flux_div(pde, u, gu, x)
        assert np.abs(pde.flux_div(u, gu, x) - ref).max() < 1e-12 * (
            1 + np.abs(ref).max())


class TestAdmissibility:
    def test_sw_raises_with_component(self):
        pde = ShallowWaterSystem()
        with pytest.raises(StateError) as err:
            pde.check_admissible(np.array([[-0.1, 0.0, 0.0]]))
        assert err.value.component == "h"

    def test_euler_negative_pressure(self):
        pde = EulerSystem()
        u = np.array([[1.0, 2.0, 0.0, 1.0]])  # E < kinetic energy
        with pytest.raises(StateError) as err:
            pde.check_admissible(u)
        assert err.value.component == "p"

    def test_masks(self):
        pde = EulerSystem()
        u = np.array([[1.0, 0.0, 0.0, 2.5], [1.0, 2.0, 0.0, 1.0]])
        assert list(pde.admissible_mask(u)) == [True, False]


class TestGhosts:
    def test_scalar_wall_copies(self):
        pde = AdvectionSystem()
        u = np.array([0.7])
        assert np.array_equal(pde.wall_ghost(u, np.array([0.0, 1.0])), u)

    def test_euler_wall_reflects_normal_momentum(self):
        pde = EulerSystem()
        u = np.array([1.0, 0.3, 0.4, 2.8])
        n = np.array([0.0, 1.0])
        g = pde.wall_ghost(u, n)
        assert np.allclose(g, [1.0, 0.3, -0.4, 2.8], atol=1e-15)


def test_make_system_rejects_unknown():
    with pytest.raises(ValueError):
        make_system("mhd")
