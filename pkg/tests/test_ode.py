import numpy as np
import pytest

from vortexflow import ode
from vortexflow.errors import SingularityError
from vortexflow.renorm import VortexConfig, W_gradient, lattice_contains, nearest_lattice_xi
from vortexflow.surfaces import Surface

TORUS = Surface.flat_torus(1.0, 1.0)
SPHERE = Surface.sphere(1.0)
DIPOLE = VortexConfig(np.array([[0.3, 0.5], [0.7, 0.5]]), np.array([1, -1]))
ANTIPODAL = VortexConfig(np.array([[np.pi / 2, 0.3], [np.pi / 2, 0.3 + np.pi]]), np.array([1, 1]))


def test_rhs_antipodal_zero():
    st = ode.make_state(ANTIPODAL, np.zeros(0), SPHERE)
    assert np.max(np.abs(ode.rhs(st, SPHERE))) < 1e-8


def test_rhs_charge_flip_parity():
    c = VortexConfig(np.array([[0.3, 0.35], [0.7, 0.35], [0.3, 0.65], [0.7, 0.65]]), np.array([1, -1, -1, 1]))
    flipped = VortexConfig(c.points.copy(), -c.charges)
    st1 = ode.make_state(c, np.zeros(2), TORUS)
    st2 = ode.make_state(flipped, np.zeros(2), TORUS)
    assert np.allclose(ode.rhs(st1, TORUS), ode.rhs(st2, TORUS), atol=1e-12)


def test_rhs_matches_minus_grad_over_pi():
    xi = nearest_lattice_xi(DIPOLE, TORUS)
    st = ode.make_state(DIPOLE, xi, TORUS)
    expected = -W_gradient(DIPOLE, st.xi, TORUS) / np.pi
    assert np.allclose(ode.rhs(st, TORUS), expected, atol=1e-13)


def test_rhs_near_collision_raises():
    c = VortexConfig(np.array([[0.5, 0.5], [0.5001, 0.5]]), np.array([1, -1]))
    st = ode.make_state(c, nearest_lattice_xi(c, TORUS), TORUS)
    with pytest.raises(SingularityError):
        ode.rhs(st, TORUS)


def test_antipodal_pair_stationary():
    traj = ode.integrate(ANTIPODAL, np.zeros(0), SPHERE, T=1.0, dt=1e-2)
    drift = max(
        float(SPHERE.geodesic_distance(traj.points[-1][j], ANTIPODAL.points[j])) for j in range(2)
    )
    assert drift < 1e-8


def test_dipole_collides_and_t_star_monotone_in_separation():
    t_stars = []
    for sep in (0.25, 0.3, 0.35, 0.4, 0.45):
        c = VortexConfig(
            np.array([[0.5 - sep / 2, 0.5], [0.5 + sep / 2, 0.5]]), np.array([1, -1])
        )
        xi = nearest_lattice_xi(c, TORUS)
        traj = ode.integrate(c, xi, TORUS, T=2.0, dt=2e-4)
        assert traj.collided
        t_stars.append(traj.t_star)
    assert all(b > a for a, b in zip(t_stars, t_stars[1:]))


def test_rk4_order():
    xi = nearest_lattice_xi(DIPOLE, TORUS)
    T = 0.008
    ref = ode.integrate(DIPOLE, xi, TORUS, T=T, dt=1.25e-5).points[-1]
    e1 = np.abs(ode.integrate(DIPOLE, xi, TORUS, T=T, dt=2e-4).points[-1] - ref).max()
    e2 = np.abs(ode.integrate(DIPOLE, xi, TORUS, T=T, dt=1e-4).points[-1] - ref).max()
    assert e1 / e2 == pytest.approx(16.0, rel=0.3)


def test_energy_descent_and_balance():
    xi = nearest_lattice_xi(DIPOLE, TORUS)
    traj = ode.integrate(DIPOLE, xi, TORUS, T=1.0, dt=2e-4)
    assert np.all(np.diff(traj.energy) <= 1e-10)
    drop = traj.energy[0] - traj.energy[-1]
    assert abs(traj.balance_residual()) < 0.01 * drop


def test_lattice_residue_along_trajectory():
    xi = nearest_lattice_xi(DIPOLE, TORUS)
    traj = ode.integrate(DIPOLE, xi, TORUS, T=0.01, dt=2e-4, store_stride=4)
    for k in range(len(traj.times)):
        c = VortexConfig(traj.points[k], traj.charges)
        ok, res = lattice_contains(traj.xis[k], c, TORUS, tol=1e-8)
        assert ok, res


def test_exchange_symmetry_of_trajectories():
    c = VortexConfig(np.array([[0.25, 0.25], [0.75, 0.75], [0.25, 0.75], [0.75, 0.25]]), np.array([1, 1, -1, -1]))
    xi = nearest_lattice_xi(c, TORUS)
    perm = np.array([1, 0, 3, 2])
    cp = VortexConfig(c.points[perm], c.charges[perm])
    t1 = ode.integrate(c, xi, TORUS, T=0.003, dt=1e-4)
    t2 = ode.integrate(cp, xi, TORUS, T=0.003, dt=1e-4)
    assert np.array_equal(t1.points[-1][perm], t2.points[-1])


def test_zero_horizon():
    xi = nearest_lattice_xi(DIPOLE, TORUS)
    traj = ode.integrate(DIPOLE, xi, TORUS, T=0.0, dt=1e-4)
    assert len(traj.times) == 1 and not traj.collided


def test_off_lattice_xi_rejected():
    with pytest.raises(ValueError):
        ode.make_state(DIPOLE, np.array([0.4, 0.4]), TORUS)
