"""Vortex detection in discrete fields and trajectory association.

Detection clusters plaquettes with nonzero quantized winding (8-connected,
periodic where the grid is) and reports per cluster the integer charge, a
vorticity-weighted centroid, and a core-size estimate.  Association is greedy
nearest-neighbour matching among equal charges frame to frame, with a
velocity-extrapolation tie-break when two candidates are within 10% of each
other.  A frame where two tracks approach within the collision radius, or
where some track loses its detection, freezes the track set at the previous
frame and records it as the first-collision time T*.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .fields import TangentField, vorticity_field
from .surfaces import TORUS, Surface

log = logging.getLogger(__name__)


@dataclass
class VortexDetection:
    position: np.ndarray  # chart coordinates
    charge: int
    core_radius: float  # crude scale estimate: h * sqrt(cluster size)


def _cluster_cells(mask, periodic1, periodic2):
    """8-connected components of a boolean cell mask; returns a label array."""
    n1, n2 = mask.shape
    labels = -np.ones(mask.shape, dtype=int)
    current = 0
    for i0, j0 in zip(*np.nonzero(mask)):
        if labels[i0, j0] >= 0:
            continue
        stack = [(i0, j0)]
        labels[i0, j0] = current
        while stack:
            i, j = stack.pop()
            for di in (-1, 0, 1):
                for dj in (-1, 0, 1):
                    ii, jj = i + di, j + dj
                    if periodic1:
                        ii %= n1
                    elif not (0 <= ii < n1):
                        continue
                    if periodic2:
                        jj %= n2
                    elif not (0 <= jj < n2):
                        continue
                    if mask[ii, jj] and labels[ii, jj] < 0:
                        labels[ii, jj] = current
                        stack.append((ii, jj))
        current += 1
    return labels, current


def detect(u: TangentField):
    """Quantized-winding vortex detections, deterministically ordered."""
    g = u.grid
    s = g.surface
    omega = vorticity_field(u)
    winding = omega - s.gauss_curvature() * g.cell_area
    q = np.rint(winding / (2 * np.pi)).astype(int)
    mask = q != 0
    if not np.any(mask):
        return []
    labels, count = _cluster_cells(mask, s.kind == TORUS, True)
    centers = g.cell_centers()
    h_scale = max(g.h1, g.h2) if s.kind == TORUS else s.R * max(g.h1, g.h2)
    out = []
    for lab in range(count):
        cells = np.argwhere(labels == lab)
        charge = int(np.sum(q[labels == lab]))
        if charge == 0:
            continue
        weights = np.abs(winding[labels == lab])
        anchor = centers[cells[np.argmax(weights)][0], cells[np.argmax(weights)][1]]
        # centroid in the tangent chart of the heaviest cell, wrap-aware
        pos_cells = centers[cells[:, 0], cells[:, 1]]
        if s.kind == TORUS:
            rel = s.wrap_displacement(anchor, pos_cells)
            centroid = s.reduce_point(anchor + np.sum(weights[:, None] * rel, axis=0) / np.sum(weights))
        else:
            rel = np.stack([s.log_map(anchor, p) for p in pos_cells])
            centroid = s.exp_map(anchor, np.sum(weights[:, None] * rel, axis=0) / np.sum(weights))
        out.append(VortexDetection(centroid, charge, h_scale * np.sqrt(len(cells))))
    out.sort(key=lambda d: (d.charge, round(d.position[0], 9), round(d.position[1], 9)))
    return out


@dataclass
class TrackSet:
    times: np.ndarray  # (m,)
    positions: np.ndarray  # (m, n, 2)
    charges: np.ndarray  # (n,)
    collided: bool
    t_star: float  # time of the last valid frame when collided, else end time


def track(frames, times, s: Surface, collision_radius) -> TrackSet:
    """Associate per-frame detection lists into vortex tracks.

    frames: time-ordered list of detection lists.  Tracks are seeded from the
    first frame; charges stay constant along each track.  Truncates at the
    first frame violating the collision radius or losing a detection.
    """
    if len(frames) != len(times):
        raise ValueError("frames and times must align")
    if not frames or not frames[0]:
        return TrackSet(np.asarray(times[:1]), np.zeros((min(1, len(times)), 0, 2)), np.zeros(0, dtype=int), False, float(times[0]) if len(times) else 0.0)
    n = len(frames[0])
    charges = np.array([d.charge for d in frames[0]], dtype=int)
    positions = [np.stack([d.position for d in frames[0]])]
    kept_times = [times[0]]
    collided = False

    for fi in range(1, len(frames)):
        dets = list(frames[fi])
        if len(dets) != n:
            collided = True
            break
        prev = positions[-1]
        vel = None
        if len(positions) >= 2:
            dt_prev = kept_times[-1] - kept_times[-2]
            if dt_prev > 0:
                if s.kind == TORUS:
                    vel = s.wrap_displacement(positions[-2], positions[-1]) / dt_prev
                else:
                    vel = np.stack([s.log_map(p, q) for p, q in zip(positions[-2], positions[-1])]) / dt_prev
        new_pos = np.zeros_like(prev)
        taken = set()
        ok = True
        for ti in range(n):
            cands = [
                (float(s.geodesic_distance(prev[ti], d.position)), ci)
                for ci, d in enumerate(dets)
                if ci not in taken and d.charge == charges[ti]
            ]
            if not cands:
                ok = False
                break
            cands.sort()
            if len(cands) >= 2 and cands[0][0] > 0 and (cands[1][0] - cands[0][0]) < 0.1 * cands[1][0] and vel is not None:
                dt_now = times[fi] - kept_times[-1]
                predicted = s.exp_map(prev[ti], vel[ti] * dt_now)
                cands = [
                    (float(s.geodesic_distance(predicted, dets[ci].position)), ci)
                    for _, ci in cands
                ]
                cands.sort()
                log.info("ambiguous match at t=%g resolved by velocity extrapolation", times[fi])
            best = cands[0][1]
            taken.add(best)
            new_pos[ti] = dets[best].position
        if not ok:
            collided = True
            break
        dmin = np.inf
        for a in range(n):
            for b in range(a + 1, n):
                dmin = min(dmin, float(s.geodesic_distance(new_pos[a], new_pos[b])))
        if n > 1 and dmin < collision_radius:
            collided = True
            break
        positions.append(new_pos)
        kept_times.append(times[fi])

    return TrackSet(
        np.asarray(kept_times),
        np.stack(positions),
        charges,
        collided,
        float(kept_times[-1]),
    )
