"""File formats of the harness: CSVs with JSON sidecars, written atomically.

Every CSV carries a header row and a sidecar `<name>.json` holding the
surface, grid and run parameters, the hash of the producing config text and
the package version, so downstream tools can refuse mismatched inputs.

Schemas (columns):
  field snapshot: node_index, re_w, im_w
  trajectory:     t, vortex_id, charge, x1, x2
  diagnostics:    t, F_eps, dissipation, xi1, xi2
  energy table:   eps, F_eps, core_log, W, R
  green table:    x1, x2, y1, y2, G, grad_norm, H
"""

from __future__ import annotations

import hashlib
import json
import os
import tempfile

import numpy as np

from . import __version__
from .fields import GridSpec, TangentField
from .surfaces import SPHERE, Surface

RENORM_SCHEMA = "vortexflow/renorm-v1"


def write_atomic(path, text):
    """Write text to path via a temp file + rename (atomic on POSIX)."""
    directory = os.path.dirname(os.path.abspath(path)) or "."
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", text=True)
    try:
        with os.fdopen(fd, "w") as f:
            f.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def config_hash(text: str) -> str:
    return hashlib.sha256(text.encode()).hexdigest()[:16]


def surface_meta(s: Surface):
    if s.kind == SPHERE:
        return {"kind": "sphere", "R": s.R}
    return {"kind": "torus", "L1": s.L1, "L2": s.L2}


def surface_from_meta(meta):
    if meta["kind"] == "sphere":
        return Surface.sphere(meta["R"])
    return Surface.flat_torus(meta["L1"], meta["L2"])


def write_sidecar(path, payload):
    payload = dict(payload)
    payload.setdefault("version", __version__)
    write_atomic(path + ".json", json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _fmt(x):
    return f"{x:.17g}"


# -- field snapshots ----------------------------------------------------------


def save_field(path, u: TangentField, eps=None, time=None, extra=None):
    g = u.grid
    lines = ["node_index,re_w,im_w"]
    flat = u.w.ravel()
    lines.extend(f"{i},{_fmt(v.real)},{_fmt(v.imag)}" for i, v in enumerate(flat))
    write_atomic(path, "\n".join(lines) + "\n")
    meta = {
        "surface": surface_meta(g.surface),
        "grid": {"N1": g.N1, "N2": g.N2},
        "eps": eps,
        "time": time,
    }
    if extra:
        meta.update(extra)
    write_sidecar(path, meta)


def load_field(path):
    with open(path + ".json") as f:
        meta = json.load(f)
    s = surface_from_meta(meta["surface"])
    grid = GridSpec(s, meta["grid"]["N1"], meta["grid"]["N2"])
    data = np.loadtxt(path, delimiter=",", skiprows=1)
    order = np.argsort(data[:, 0])
    w = (data[order, 1] + 1j * data[order, 2]).reshape(grid.shape)
    return TangentField(grid, w), meta


# -- trajectories -------------------------------------------------------------


def write_trajectory(path, times, positions, charges, meta):
    """times (m,), positions (m, n, 2), charges (n,); meta must carry
    surface/provenance fields and will be completed with t_star etc."""
    lines = ["t,vortex_id,charge,x1,x2"]
    for ti, t in enumerate(times):
        for vid in range(len(charges)):
            p = positions[ti][vid]
            lines.append(f"{_fmt(t)},{vid},{charges[vid]},{_fmt(p[0])},{_fmt(p[1])}")
    write_atomic(path, "\n".join(lines) + "\n")
    write_sidecar(path, meta)


def read_trajectory(path):
    with open(path + ".json") as f:
        meta = json.load(f)
    raw = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    if raw.size == 0:
        return np.zeros(0), np.zeros((0, 0, 2)), np.zeros(0, dtype=int), meta
    times = np.unique(raw[:, 0])
    n = int(raw[:, 1].max()) + 1
    positions = np.zeros((len(times), n, 2))
    charges = np.zeros(n, dtype=int)
    t_index = {t: i for i, t in enumerate(times)}
    for row in raw:
        i = t_index[row[0]]
        vid = int(row[1])
        charges[vid] = int(row[2])
        positions[i, vid] = row[3:5]
    return times, positions, charges, meta


def write_diagnostics(path, times, energy, dissipation, xi, meta):
    lines = ["t,F_eps,dissipation,xi1,xi2"]
    for i, t in enumerate(times):
        x1 = xi[i][0] if len(xi[i]) > 0 else 0.0
        x2 = xi[i][1] if len(xi[i]) > 1 else 0.0
        lines.append(f"{_fmt(t)},{_fmt(energy[i])},{_fmt(dissipation[i])},{_fmt(x1)},{_fmt(x2)}")
    write_atomic(path, "\n".join(lines) + "\n")
    write_sidecar(path, meta)


def write_energy_table(path, rows, meta):
    lines = ["eps,F_eps,core_log,W,R"]
    for r in rows:
        lines.append(
            f"{_fmt(r['eps'])},{_fmt(r['F'])},{_fmt(r['core_log'])},{_fmt(r['W'])},{_fmt(r['R'])}"
        )
    write_atomic(path, "\n".join(lines) + "\n")
    write_sidecar(path, meta)


def write_green_table(path, rows, meta):
    lines = ["x1,x2,y1,y2,G,grad_norm,H"]
    for r in rows:
        lines.append(",".join(_fmt(v) for v in r))
    write_atomic(path, "\n".join(lines) + "\n")
    write_sidecar(path, meta)


def write_report(path, payload):
    payload = dict(payload)
    payload.setdefault("version", __version__)
    write_atomic(path, json.dumps(payload, indent=2, sort_keys=True) + "\n")


# -- renormalized-energy records ---------------------------------------------


def renorm_record(s: Surface, config, xi, w=None, grad=None):
    """Versioned JSON-ready record of (surface, a, d, xi, W, grad W)."""
    rec = {
        "schema": RENORM_SCHEMA,
        "surface": surface_meta(s),
        "a": np.asarray(config.points).tolist(),
        "d": np.asarray(config.charges).tolist(),
        "xi": np.asarray(xi).tolist(),
    }
    if w is not None:
        rec["W"] = float(w)
    if grad is not None:
        rec["grad_W"] = np.asarray(grad).tolist()
    return rec
