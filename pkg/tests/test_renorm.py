import numpy as np
import pytest

import oracles
from vortexflow.errors import SingularityError
from vortexflow.renorm import (
    VortexConfig,
    W_gradient,
    W_value,
    check_admissible,
    generator_offsets,
    lattice_contains,
    nearest_lattice_xi,
    xi_continuation,
    xi_derivative,
    zeta_offsets,
)
from vortexflow.surfaces import Surface, wrap_angle

TORUS = Surface.flat_torus(1.0, 1.0)
SPHERE = Surface.sphere(1.0)


def random_torus_config(rng, n_pairs=2, min_sep=0.15, s=TORUS):
    while True:
        pts = np.stack([s.random_point(rng) for _ in range(2 * n_pairs)])
        c = VortexConfig(pts, np.array([1] * n_pairs + [-1] * n_pairs))
        seps = [
            s.geodesic_distance(pts[j], pts[k])
            for j in range(c.n)
            for k in range(j + 1, c.n)
        ]
        if min(seps) > min_sep:
            return c


def random_sphere_config(rng, min_sep=0.5):
    while True:
        pts = np.stack([SPHERE.random_point(rng, margin=0.3) for _ in range(2)])
        c = VortexConfig(pts, np.array([1, 1]))
        if SPHERE.geodesic_distance(pts[0], pts[1]) > min_sep:
            return c


def test_admissibility_examples():
    ok = check_admissible(VortexConfig(np.array([[1.0, 1.0], [2.0, 2.0]]), np.array([1, 1])), SPHERE)
    assert ok == []
    ok = check_admissible(VortexConfig(np.array([[0.2, 0.2], [0.7, 0.7]]), np.array([1, -1])), TORUS)
    assert ok == []
    bad = check_admissible(VortexConfig(np.array([[1.0, 1.0], [2.0, 2.0]]), np.array([1, -1])), SPHERE)
    assert any(code == "total_charge" for code, _ in bad)
    dup = check_admissible(VortexConfig(np.array([[1.0, 1.0], [1.0, 1.0]]), np.array([1, 1])), SPHERE)
    assert any(code == "duplicate_point" for code, _ in dup)


def test_zeta_sphere_empty():
    c = VortexConfig(np.array([[1.0, 1.0], [2.0, 2.0]]), np.array([1, 1]))
    assert zeta_offsets(c, SPHERE).size == 0


def test_zeta_against_quadrature_oracle(rng):
    for _ in range(3):
        c = random_torus_config(rng)
        offs = generator_offsets(c, TORUS)
        z = zeta_offsets(c, TORUS, offsets=offs)
        zq = oracles.quadrature_zeta(TORUS, c, offs)
        assert np.allclose(z, zq, atol=1e-10)


def test_zeta_reflection_antisymmetry():
    # reflecting the configuration about the generator line flips zeta mod 2pi
    c = VortexConfig(np.array([[0.3, 0.41], [0.7, 0.41]]), np.array([1, -1]))
    refl = VortexConfig(np.column_stack([(2 * 0.618033988749895 - c.points[:, 0]) % 1.0, c.points[:, 1]]), c.charges)
    z1 = zeta_offsets(c, TORUS)
    z2 = zeta_offsets(refl, TORUS)
    assert abs(wrap_angle(z1[1] + z2[1])) < 1e-12


def test_zeta_period_shift_invariance(rng):
    c = random_torus_config(rng)
    shifted = c.replace_point(0, c.points[0] + np.array([1.0, 0.0]))
    shifted = VortexConfig(TORUS.reduce_point(shifted.points), c.charges)
    assert np.max(np.abs(wrap_angle(zeta_offsets(c, TORUS) - zeta_offsets(shifted, TORUS)))) < 1e-12


def test_lattice_contains():
    c = VortexConfig(np.array([[1.0, 1.0], [2.0, 2.0]]), np.array([1, 1]))
    ok, res = lattice_contains(np.zeros(0), c, SPHERE)
    assert ok and res.size == 0

    ct = VortexConfig(np.array([[0.23, 0.71], [0.68, 0.22]]), np.array([1, -1]))
    xi = nearest_lattice_xi(ct, TORUS, target=np.array([0.4, -0.2]))
    ok, res = lattice_contains(xi, ct, TORUS)
    assert ok and np.max(np.abs(res)) < 1e-12
    xi_bad = xi + np.array([np.pi / TORUS.L1, 0.0])
    ok, res = lattice_contains(xi_bad, ct, TORUS)
    assert not ok and abs(abs(res[0]) - np.pi) < 1e-12


def test_xi_continuation_identity_and_membership(rng):
    c = random_torus_config(rng)
    xi = nearest_lattice_xi(c, TORUS)
    assert np.allclose(xi_continuation(c, xi, c, TORUS), xi, atol=1e-15)
    c2 = VortexConfig(TORUS.reduce_point(c.points + rng.normal(0, 0.1, c.points.shape)), c.charges)
    if not check_admissible(c2, TORUS):
        xi2 = xi_continuation(c, xi, c2, TORUS)
        ok, _ = lattice_contains(xi2, c2, TORUS)
        assert ok


def test_xi_continuation_taylor(rng):
    c = random_torus_config(rng)
    xi = nearest_lattice_xi(c, TORUS)
    v = rng.normal(size=2)
    deriv = xi_derivative(c, TORUS, 0, v)
    errs = []
    for delta in (1e-3, 5e-4):
        cp = c.replace_point(0, TORUS.exp_map(c.points[0], delta * v))
        xi_p = xi_continuation(c, xi, cp, TORUS)
        errs.append(np.max(np.abs(xi_p - xi - delta * deriv)))
    # O(delta^2) remainder
    assert errs[1] < 0.35 * errs[0] + 1e-14


def test_xi_derivative_oracles(rng):
    c = random_torus_config(rng)
    offs = generator_offsets(c, TORUS)
    for j in (0, 1):
        v = rng.normal(size=2)
        an = xi_derivative(c, TORUS, j, v)
        quad = oracles.quadrature_xi_derivative(TORUS, c, j, v, offs)
        assert np.allclose(an, quad, atol=1e-8)
        # linearity, exact
        assert np.allclose(xi_derivative(c, TORUS, j, 2 * v), 2 * an, atol=1e-12)
    cs = random_sphere_config(rng)
    assert xi_derivative(cs, SPHERE, 0, np.array([1.0, 0.0])).size == 0


def test_xi_derivative_matches_continuation_fd(rng):
    c = random_torus_config(rng)
    xi = nearest_lattice_xi(c, TORUS)
    t = 1e-5
    for j in (0, 1):
        v = rng.normal(size=2)
        cp = c.replace_point(j, TORUS.exp_map(c.points[j], t * v))
        cm = c.replace_point(j, TORUS.exp_map(c.points[j], -t * v))
        fd = (xi_continuation(c, xi, cp, TORUS) - xi_continuation(c, xi, cm, TORUS)) / (2 * t)
        an = xi_derivative(c, TORUS, j, v)
        assert np.max(np.abs(fd - an)) < 1e-4 * max(1.0, float(np.max(np.abs(an))))


def test_xi_monodromy_around_generator_is_lattice_translate(rng):
    # dragging one vortex around a full period returns the continued xi to a
    # lattice translate of the start value (the observed monodromy of the
    # continuous branch); here the shift is 2 pi d_j / L along the dual axis
    c = random_torus_config(rng, 1)
    xi = nearest_lattice_xi(c, TORUS)
    steps = 16
    xi_cur, c_cur = xi, c
    for k in range(1, steps + 1):
        c_next = c_cur.replace_point(0, TORUS.reduce_point(c_cur.points[0] + np.array([1.0 / steps, 0.0])))
        xi_cur = xi_continuation(c_cur, xi_cur, c_next, TORUS)
        c_cur = c_next
    assert np.allclose(c_cur.points, c.points, atol=1e-12)
    shift = xi_cur - xi
    periods = np.array([shift[0] * TORUS.L1, shift[1] * TORUS.L2])
    assert np.max(np.abs(periods - 2 * np.pi * np.round(periods / (2 * np.pi)))) < 1e-9
    assert np.any(np.round(periods / (2 * np.pi)) != 0)  # nontrivial monodromy


def test_W_dipole_log_law():
    # W(r) - 2 pi log r stays bounded as the opposite-charge pair shrinks
    vals = []
    for r in (1e-3, 1e-2, 1e-1):
        c = VortexConfig(np.array([[0.5 - r / 2, 0.5], [0.5 + r / 2, 0.5]]), np.array([1, -1]))
        vals.append(W_value(c, np.zeros(2), TORUS, lattice_policy="ignore") - 2 * np.pi * np.log(r))
    assert np.max(vals) - np.min(vals) < 0.5


def test_W_collision_slopes():
    # slope of W vs log r: -2 pi for opposite charges, +2 pi for equal ones
    def slope(charges, s, xi_dim):
        rs = np.array([2e-3, 1e-3, 5e-4])
        ws = []
        for r in rs:
            if s.kind == "torus":
                pts = np.array([[0.5 - r / 2, 0.5], [0.5 + r / 2, 0.5]])
            else:
                pts = np.array([[np.pi / 2, 1.0 - r / 2], [np.pi / 2, 1.0 + r / 2]])
            c = VortexConfig(pts, charges)
            ws.append(W_value(c, np.zeros(xi_dim), s, lattice_policy="ignore"))
        return np.polyfit(np.log(rs), ws, 1)[0]

    s_opp = slope(np.array([1, -1]), TORUS, 2)
    assert abs(s_opp - 2 * np.pi) < 0.05 * 2 * np.pi
    s_eq = slope(np.array([1, 1]), SPHERE, 0)
    assert abs(s_eq + 2 * np.pi) < 0.05 * 2 * np.pi


def test_W_xi_quadratic_term_exact(rng):
    c = random_torus_config(rng)
    xi = rng.normal(size=2)
    dw = W_value(c, xi, TORUS, "ignore") - W_value(c, np.zeros(2), TORUS, "ignore")
    assert dw == pytest.approx(0.5 * TORUS.volume * float(xi @ xi), rel=1e-12)


def test_W_sphere_pair_minimized_antipodal():
    psis = np.linspace(0.5, np.pi, 101)
    vals = []
    for p in psis:
        c = VortexConfig(np.array([[np.pi / 2, 0.0], [np.pi / 2, p]]), np.array([1, 1]))
        vals.append(W_value(c, np.zeros(0), SPHERE))
    assert np.argmin(vals) == len(psis) - 1  # separation pi


def test_W_gradient_antipodal_zero():
    c = VortexConfig(np.array([[np.pi / 2, 0.3], [np.pi / 2, 0.3 + np.pi]]), np.array([1, 1]))
    assert np.max(np.abs(W_gradient(c, np.zeros(0), SPHERE))) < 1e-8


def fd_constrained_gradient(c, xi, s, t=1e-5):
    out = np.zeros((c.n, 2))
    for j in range(c.n):
        for k, e in enumerate((np.array([1.0, 0.0]), np.array([0.0, 1.0]))):
            cp = c.replace_point(j, s.exp_map(c.points[j], t * e))
            cm = c.replace_point(j, s.exp_map(c.points[j], -t * e))
            if s.kind == "torus":
                xp = xi_continuation(c, xi, cp, s)
                xm = xi_continuation(c, xi, cm, s)
            else:
                xp = xm = xi
            out[j, k] = (
                W_value(cp, xp, s, "ignore") - W_value(cm, xm, s, "ignore")
            ) / (2 * t)
    return out


def test_constrained_gradient_master(rng):
    for _ in range(4):
        c = random_torus_config(rng)
        xi = nearest_lattice_xi(c, TORUS, target=rng.normal(0, 0.5, 2))
        grad = W_gradient(c, xi, TORUS)
        fd = fd_constrained_gradient(c, xi, TORUS)
        assert np.max(np.abs(grad - fd)) < 1e-5 * max(1.0, float(np.max(np.abs(fd))))
    for _ in range(4):
        c = random_sphere_config(rng)
        grad = W_gradient(c, np.zeros(0), SPHERE)
        fd = fd_constrained_gradient(c, np.zeros(0), SPHERE)
        assert np.max(np.abs(grad - fd)) < 1e-5 * max(1.0, float(np.max(np.abs(fd))))


def test_translation_equivariance(rng):
    c = random_torus_config(rng)
    xi = nearest_lattice_xi(c, TORUS)
    shift = np.array([0.217, -0.143])
    c2 = VortexConfig(TORUS.reduce_point(c.points + shift), c.charges)
    xi2 = xi_continuation(c, xi, c2, TORUS)
    assert W_value(c2, xi2, TORUS) == pytest.approx(W_value(c, xi, TORUS), abs=1e-10)
    g1 = W_gradient(c, xi, TORUS)
    g2 = W_gradient(c2, xi2, TORUS)
    assert np.allclose(g1, g2, atol=1e-9)


def test_exchange_symmetry(rng):
    c = random_torus_config(rng)
    xi = nearest_lattice_xi(c, TORUS)
    perm = np.array([1, 0, 3, 2])  # swap within equal-charge groups
    cp = VortexConfig(c.points[perm], c.charges[perm])
    assert W_value(cp, xi, TORUS) == W_value(c, xi, TORUS)
    assert np.allclose(W_gradient(cp, xi, TORUS), W_gradient(c, xi, TORUS)[perm], atol=0)


def test_coincident_vortices_raise():
    c = VortexConfig(np.array([[0.3, 0.3], [0.3, 0.3 + 1e-12]]), np.array([1, -1]))
    with pytest.raises((SingularityError, Exception)):
        W_value(c, np.zeros(2), TORUS, "ignore")


def test_renorm_record_schema():
    from vortexflow.fileio import RENORM_SCHEMA, renorm_record

    c = VortexConfig(np.array([[0.2, 0.3], [0.7, 0.8]]), np.array([1, -1]))
    xi = nearest_lattice_xi(c, TORUS)
    rec = renorm_record(TORUS, c, xi, w=W_value(c, xi, TORUS), grad=W_gradient(c, xi, TORUS))
    assert rec["schema"] == RENORM_SCHEMA
    assert len(rec["a"]) == 2 and len(rec["grad_W"]) == 2
