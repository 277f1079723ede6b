import numpy as np
import pytest

from vortexflow.errors import ChartError, InjectivityError
from vortexflow.surfaces import Surface, rotate90


def test_metric_examples():
    tor = Surface.flat_torus(1.0, 1.0)
    g, sg = tor.metric_at(np.array([0.37, 0.82]))
    assert np.allclose(g, np.eye(2)) and sg == 1.0

    sp1 = Surface.sphere(1.0)
    g, sg = sp1.metric_at(np.array([np.pi / 2, 0.3]))
    assert np.allclose(g, np.diag([1.0, 1.0]))

    sp2 = Surface.sphere(2.0)
    g, sg = sp2.metric_at(np.array([np.pi / 3, 1.0]))
    assert np.allclose(np.diag(g), [4.0, 3.0])
    assert abs(sg - np.sqrt(4.0 * 3.0)) < 1e-14


def test_metric_spd_and_sqrt_closed_form(rng):
    for s in (Surface.flat_torus(1.3, 0.7), Surface.sphere(1.7)):
        for _ in range(20):
            p = s.random_point(rng, margin=0.05)
            g, sg = s.metric_at(p)
            assert np.all(np.linalg.eigvalsh(g) > 0)
            assert abs(sg - np.sqrt(np.linalg.det(g))) < 1e-14 * max(1.0, sg)


def test_pole_is_chart_error():
    sp = Surface.sphere(1.0)
    with pytest.raises(ChartError):
        sp.metric_at(np.array([0.0, 0.3]))
    with pytest.raises(ChartError):
        sp.connection_form_at(np.array([np.pi, 0.0]))


def test_gauss_curvature_values():
    assert Surface.flat_torus(2.0, 1.0).gauss_curvature() == 0.0
    assert Surface.sphere(2.0).gauss_curvature() == 0.25


def test_discrete_dA_matches_curvature_times_area():
    # discrete exterior derivative of A on a small coordinate quadrilateral
    # [th, th+h] x [ph, ph+h], edges sampled at midpoints through
    # connection_form_at
    s = Surface.sphere(1.4)
    th, ph, h = 0.9, 2.1, 1e-3
    a_bot = s.connection_form_at(np.array([th, ph + h / 2]))[1]
    a_top = s.connection_form_at(np.array([th + h, ph + h / 2]))[1]
    circulation = a_top * h - a_bot * h  # theta-edges carry no connection
    area = s.R**2 * (np.cos(th) - np.cos(th + h)) * h
    assert abs(circulation - s.gauss_curvature() * area) < 1e-6 * abs(circulation)


def test_connection_form_values():
    tor = Surface.flat_torus(1.0, 1.0)
    assert np.allclose(tor.connection_form_at(np.array([0.2, 0.8])), 0.0)
    sp = Surface.sphere(1.0)
    a = sp.connection_form_at(np.array([np.pi / 2, 1.0]))
    assert np.allclose(a, [0.0, 0.0])
    a = sp.connection_form_at(np.array([np.pi / 3, 1.0]))
    assert np.allclose(a, [0.0, -np.cos(np.pi / 3)])


def test_connection_loop_integral_is_enclosed_curvature():
    # quadrature of A around a small geodesic circle about p; the loop is
    # contractible and pole-free, so the integral must equal the enclosed
    # curvature kappa * area(disk)
    s = Surface.sphere(1.0)
    p = np.array([1.1, 0.7])
    r = 0.05
    n = 4096
    angles = 2 * np.pi * (np.arange(n) + 0.5) / n
    pts = np.stack([s.exp_map(p, r * np.array([np.cos(a), np.sin(a)])) for a in angles])
    dphi = np.diff(pts[:, 1], append=pts[:1, 1])
    dphi = (dphi + np.pi) % (2 * np.pi) - np.pi
    a_phi = np.array([s.connection_form_at(q)[1] for q in pts])
    hol = float(np.sum(a_phi * dphi))
    area = 2 * np.pi * (1 - np.cos(r))  # geodesic disk on the unit sphere
    assert abs(hol - s.gauss_curvature() * area) < 1e-4 * abs(hol)


def test_distances():
    tor = Surface.flat_torus(1.0, 1.0)
    assert abs(tor.geodesic_distance([0.1, 0.0], [0.9, 0.0]) - 0.2) < 1e-15
    sp = Surface.sphere(1.0)
    assert abs(sp.geodesic_distance([np.pi / 2, 0.0], [np.pi / 2, np.pi]) - np.pi) < 1e-12
    assert abs(sp.geodesic_distance([np.pi / 2, 0.0], [np.pi / 2, np.pi / 2]) - np.pi / 2) < 1e-12


def test_distance_symmetry_triangle(rng):
    for s in (Surface.flat_torus(1.0, 0.8), Surface.sphere(1.2)):
        for _ in range(30):
            p, q, r = (s.random_point(rng, margin=0.05) for _ in range(3))
            dpq = s.geodesic_distance(p, q)
            assert abs(dpq - s.geodesic_distance(q, p)) < 1e-13
            assert dpq <= s.geodesic_distance(p, r) + s.geodesic_distance(r, q) + 1e-12


def test_gauss_lemma_radial_distance(rng):
    for s in (Surface.flat_torus(1.0, 1.0), Surface.sphere(1.3)):
        for _ in range(10):
            p = s.random_point(rng, margin=0.4)
            a = rng.uniform(0, 2 * np.pi)
            vhat = np.array([np.cos(a), np.sin(a)])
            t = rng.uniform(0.01, 0.8) * s.injectivity_radius
            q = s.exp_map(p, t * vhat)
            assert abs(s.geodesic_distance(p, q) - t) < 1e-10


def test_rotate90():
    v = np.array([1.0, 0.0])
    assert np.allclose(rotate90(v), [0.0, 1.0])  # tau1 -> tau2
    w = np.array([0.3, -1.7])
    assert np.allclose(rotate90(rotate90(w)), -w)
    assert abs(np.dot(rotate90(w), w)) < 1e-15
    assert abs(np.linalg.norm(rotate90(w)) - np.linalg.norm(w)) < 1e-15


def test_exp_log_examples():
    tor = Surface.flat_torus(1.0, 1.0)
    q = tor.exp_map(np.array([0.9, 0.9]), np.array([0.3, 0.2]))
    assert np.allclose(q, [0.2, 0.1], atol=1e-15)
    sp = Surface.sphere(1.0)
    q = sp.exp_map(np.array([np.pi / 2, 0.0]), (np.pi / 2) * np.array([0.0, 1.0]))
    assert np.allclose(q, [np.pi / 2, np.pi / 2], atol=1e-12)


def test_exp_log_roundtrip(rng):
    for s in (Surface.flat_torus(1.0, 0.9), Surface.sphere(1.1)):
        for _ in range(100):
            p = s.random_point(rng, margin=0.02)
            q = s.random_point(rng, margin=0.02)
            if s.geodesic_distance(p, q) >= 0.98 * s.injectivity_radius:
                continue
            v = s.log_map(p, q)
            q2 = s.exp_map(p, v)
            assert s.geodesic_distance(q, q2) < 1e-10
            assert abs(np.linalg.norm(v) - s.geodesic_distance(p, q)) < 1e-12


def test_log_beyond_injectivity_raises():
    tor = Surface.flat_torus(1.0, 1.0)
    with pytest.raises(InjectivityError):
        tor.log_map(np.array([0.0, 0.0]), np.array([0.5, 0.0]))
    sp = Surface.sphere(1.0)
    with pytest.raises(InjectivityError):
        sp.log_map(np.array([np.pi / 2, 0.0]), np.array([np.pi / 2, np.pi]))


def test_transport_isometry(rng):
    s = Surface.sphere(1.0)
    for _ in range(10):
        p = s.random_point(rng, margin=0.3)
        q = s.random_point(rng, margin=0.3)
        v = rng.normal(size=2)
        w = s.transport(p, q, v)
        assert abs(np.linalg.norm(w) - np.linalg.norm(v)) < 1e-12
    # transporting along the geodesic keeps the tangent direction
    p = np.array([1.0, 0.5])
    v = np.array([0.4, 0.3])
    q = s.exp_map(p, v)
    w = s.transport(p, q, v)
    assert abs(np.linalg.norm(w) - np.linalg.norm(v)) < 1e-12
    assert np.allclose(-s.log_map(q, p), w, atol=1e-10)
