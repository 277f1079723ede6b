import numpy as np
import pytest

from vortexflow import canonical, tracking
from vortexflow.fields import GridSpec, TangentField
from vortexflow.renorm import VortexConfig
from vortexflow.surfaces import Surface

TORUS = Surface.flat_torus(1.0, 1.0)
SPHERE = Surface.sphere(1.0)


def test_detect_canonical_dipole_positions(rng):
    grid = GridSpec(TORUS, 128, 128)
    for _ in range(5):
        while True:
            pts = np.stack([TORUS.random_point(rng) for _ in range(2)])
            if TORUS.geodesic_distance(pts[0], pts[1]) > 0.25:
                break
        c = VortexConfig(pts, np.array([1, -1]))
        xi = canonical.lattice_xi_discrete(c, grid)
        u, _ = canonical.reconstruct_canonical(c, xi, grid)
        dets = tracking.detect(u)
        assert sorted(d.charge for d in dets) == [-1, 1]
        h = max(grid.h1, grid.h2)
        for d in dets:
            j = int(np.argwhere(c.charges == d.charge)[0][0])
            assert TORUS.geodesic_distance(d.position, c.points[j]) <= h


def test_detect_constant_field_empty():
    grid = GridSpec(TORUS, 64, 64)
    assert tracking.detect(TangentField(grid, np.ones(grid.shape, dtype=complex))) == []


def test_detect_sphere_total_charge():
    grid = GridSpec(SPHERE, 96, 96)
    c = VortexConfig(np.array([[1.0, 0.3], [2.3, 2.8]]), np.array([1, 1]))
    u, _ = canonical.reconstruct_canonical(c, np.zeros(0), grid)
    dets = tracking.detect(u)
    assert sum(d.charge for d in dets) == SPHERE.euler_characteristic


def test_detection_position_bench(rng):
    # position error <= h + eps/2 on well-prepared fields, 20 random configs
    grid = GridSpec(TORUS, 128, 128)
    eps = 0.06
    for _ in range(20):
        while True:
            pts = np.stack([TORUS.random_point(rng) for _ in range(2)])
            if TORUS.geodesic_distance(pts[0], pts[1]) > 0.3:
                break
        c = VortexConfig(pts, np.array([1, -1]))
        xi = canonical.lattice_xi_discrete(c, grid)
        u0 = canonical.well_prepared_initial(c, xi, eps, grid)
        dets = tracking.detect(u0)
        assert len(dets) == 2
        for d in dets:
            j = int(np.argwhere(c.charges == d.charge)[0][0])
            assert TORUS.geodesic_distance(d.position, c.points[j]) <= grid.h1 + eps / 2


def _synthetic_frames(positions_list, charges):
    frames = []
    for pos in positions_list:
        frames.append(
            [tracking.VortexDetection(np.asarray(p), int(ch), 0.01) for p, ch in zip(pos, charges)]
        )
    return frames


def test_track_static_frames():
    pos = [[[0.2, 0.2], [0.7, 0.7]]] * 6
    frames = _synthetic_frames(pos, [1, -1])
    ts = tracking.track(frames, np.arange(6) * 0.1, TORUS, collision_radius=0.05)
    assert not ts.collided
    assert np.allclose(ts.positions[0], ts.positions[-1])
    assert ts.t_star == pytest.approx(0.5)


def test_track_converging_dipole_truncates_at_radius():
    times = np.arange(8) * 0.1
    seps = [0.5, 0.4, 0.3, 0.22, 0.15, 0.08, 0.04, 0.02]
    pos = [[[0.5 - s / 2, 0.5], [0.5 + s / 2, 0.5]] for s in seps]
    frames = _synthetic_frames(pos, [1, -1])
    ts = tracking.track(frames, times, TORUS, collision_radius=0.1)
    assert ts.collided
    # first violating frame has separation 0.08 at t=0.5; T* is the frame before
    assert ts.t_star == pytest.approx(0.4)
    assert len(ts.times) == 5


def test_track_disappearance_truncates():
    pos = [[[0.2, 0.2], [0.7, 0.7]]] * 3
    frames = _synthetic_frames(pos, [1, -1])
    frames.append([])  # all detections vanish
    ts = tracking.track(frames, np.arange(4) * 0.1, TORUS, collision_radius=0.01)
    assert ts.collided and ts.t_star == pytest.approx(0.2)


def test_track_ambiguous_match_uses_velocity(caplog):
    import logging

    # track A moves steadily in -x; the third frame offers two same-charge
    # candidates nearly equidistant from A's previous position (one ahead,
    # one behind); the velocity extrapolation must pick the forward one
    times = [0.0, 0.1, 0.2]
    frames = _synthetic_frames(
        [[[0.70, 0.5], [0.31, 0.5]], [[0.60, 0.5], [0.31, 0.5]]], [1, 1]
    )
    frames.append(
        [
            tracking.VortexDetection(np.array([0.70, 0.5]), 1, 0.01),  # behind, d = 0.100
            tracking.VortexDetection(np.array([0.498, 0.5]), 1, 0.01),  # ahead, d = 0.102
        ]
    )
    with caplog.at_level(logging.INFO, logger="vortexflow.tracking"):
        ts = tracking.track(frames, times, TORUS, collision_radius=0.0)
    assert np.allclose(ts.positions[-1][0], [0.498, 0.5])
    assert any("ambiguous" in r.message for r in caplog.records)


def test_track_charge_conservation_and_permutation(rng):
    times = np.arange(5) * 0.1
    base = [[[0.2, 0.2], [0.7, 0.7], [0.4, 0.8], [0.8, 0.3]]] * 5
    charges = [1, 1, -1, -1]
    frames = _synthetic_frames(base, charges)
    shuffled = [list(reversed(f)) if i % 2 else f for i, f in enumerate(frames)]
    t1 = tracking.track(frames, times, TORUS, collision_radius=0.01)
    t2 = tracking.track(shuffled, times, TORUS, collision_radius=0.01)
    assert np.array_equal(t1.charges, t2.charges)
    assert np.allclose(t1.positions, t2.positions)
    # charges constant along each track by construction of the matcher
    assert np.array_equal(t1.charges, np.array(charges))
