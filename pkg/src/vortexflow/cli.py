"""Batch experiment driver.

    vortexflow <subcommand> --config <path> [--out <dir>] [--threads N]

Subcommands: simulate-pde, simulate-ode, compare, energy-expansion,
green-table, selftest.  Configs are flat INI files with dotted-purpose
sections (see `example_config()`); outputs are CSV/JSON files written
atomically, each carrying the config hash and package version in a sidecar.

Exit codes: 0 ok, 1 invariant failure, 2 config error, 3 numerical divergence.
"""

from __future__ import annotations

import argparse
import configparser
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import __version__, canonical, fileio, flow, ode, tracking
from .errors import ConfigError, DivergenceError, VortexflowError
from .fields import GridSpec
from .renorm import VortexConfig, nearest_lattice_xi, require_admissible
from .surfaces import SPHERE, Surface


@dataclass
class ExperimentConfig:
    surface: Surface
    n1: int
    n2: int
    config: VortexConfig
    xi_target: np.ndarray
    eps_list: list
    T: float | None  # None means "auto"
    dt: float | None
    ode_dt: float
    snapshot_stride: int
    collision_factor: float
    seed: int
    prefix: str
    text: str  # raw config text (hashed into sidecars)

    @property
    def hash(self):
        return fileio.config_hash(self.text)


def example_config():
    return """[surface]
kind = torus
L1 = 1.0
L2 = 1.0

[grid]
n1 = 256
n2 = 256

[vortices]
positions = 0.3 0.5, 0.7 0.5
charges = 1 -1

[xi]
target = 0 0

[run]
eps_list = 0.08 0.06 0.04
T = auto
dt = auto
ode_dt = 2e-4
snapshot_stride = 8
collision_factor = 6.0
seed = 0

[output]
prefix = dipole
"""


def _get(parser, section, key, default=None, required=False):
    if parser.has_option(section, key):
        return parser.get(section, key)
    if required:
        raise ConfigError(f"{section}.{key}", "missing required field")
    return default


def _floats(text):
    return [float(tok) for tok in text.replace(",", " ").split()]


def load_config(path) -> ExperimentConfig:
    if not os.path.exists(path):
        raise ConfigError("config", f"no such file: {path}")
    with open(path) as f:
        text = f.read()
    parser = configparser.ConfigParser()
    try:
        parser.read_string(text)
    except configparser.Error as e:
        raise ConfigError("config", f"unparseable INI: {e}") from None

    kind = _get(parser, "surface", "kind", required=True)
    if kind == "torus":
        s = Surface.flat_torus(
            float(_get(parser, "surface", "L1", "1.0")),
            float(_get(parser, "surface", "L2", "1.0")),
        )
    elif kind == "sphere":
        s = Surface.sphere(float(_get(parser, "surface", "R", "1.0")))
    else:
        raise ConfigError("surface.kind", f"unknown surface '{kind}'")

    try:
        n1 = int(_get(parser, "grid", "n1", required=True))
        n2 = int(_get(parser, "grid", "n2", required=True))
    except ValueError as e:
        raise ConfigError("grid", str(e)) from None

    pos_text = _get(parser, "vortices", "positions", "")
    charge_text = _get(parser, "vortices", "charges", "")
    flat = _floats(pos_text) if pos_text.strip() else []
    if len(flat) % 2 != 0:
        raise ConfigError("vortices.positions", "odd number of coordinates")
    points = np.asarray(flat, dtype=float).reshape(-1, 2)
    charges = np.asarray([int(v) for v in charge_text.split()] if charge_text.strip() else [], dtype=int)
    if len(points) != len(charges):
        raise ConfigError("vortices.charges", "count differs from positions")
    cfg = VortexConfig(points, charges)
    try:
        require_admissible(cfg, s)
    except VortexflowError as e:
        raise ConfigError("vortices", str(e)) from None

    xi_target = np.asarray(_floats(_get(parser, "xi", "target", "0 0")), dtype=float)

    eps_text = _get(parser, "run", "eps_list", None) or _get(parser, "run", "eps", None)
    if eps_text is None:
        raise ConfigError("run.eps_list", "missing required field")
    eps_list = _floats(eps_text)
    if any(e <= 0 for e in eps_list):
        raise ConfigError("run.eps_list", "eps values must be positive")

    t_text = _get(parser, "run", "T", "auto")
    T = None if t_text.strip() == "auto" else float(t_text)
    dt_text = _get(parser, "run", "dt", "auto")
    dt = None if dt_text.strip() == "auto" else float(dt_text)

    return ExperimentConfig(
        surface=s,
        n1=n1,
        n2=n2,
        config=cfg,
        xi_target=xi_target,
        eps_list=eps_list,
        T=T,
        dt=dt,
        ode_dt=float(_get(parser, "run", "ode_dt", "2e-4")),
        snapshot_stride=int(_get(parser, "run", "snapshot_stride", "8")),
        collision_factor=float(_get(parser, "run", "collision_factor", "6.0")),
        seed=int(_get(parser, "run", "seed", "0")),
        prefix=_get(parser, "output", "prefix", "run"),
        text=text,
    )


def _base_meta(ec: ExperimentConfig, **extra):
    meta = {
        "surface": fileio.surface_meta(ec.surface),
        "grid": {"N1": ec.n1, "N2": ec.n2},
        "config_hash": ec.hash,
        "seed": ec.seed,
    }
    meta.update(extra)
    return meta


def _run_ode(ec: ExperimentConfig, xi_start=None):
    s = ec.surface
    if s.kind == SPHERE:
        xi_ode = np.zeros(0)
    else:
        target = xi_start if xi_start is not None else ec.xi_target
        xi_ode = nearest_lattice_xi(ec.config, s, target=target)
    horizon = ec.T if ec.T is not None else 1.0
    return ode.integrate(ec.config, xi_ode, s, T=horizon, dt=ec.ode_dt), xi_ode


def _collision_radius(ec: ExperimentConfig, eps):
    r = ec.collision_factor * eps
    if ec.config.n >= 2:
        dmin = np.inf
        for j in range(ec.config.n):
            for k in range(j + 1, ec.config.n):
                dmin = min(dmin, float(ec.surface.geodesic_distance(ec.config.points[j], ec.config.points[k])))
        # keep the start outside the collision region for coarse eps
        r = min(r, 0.5 * dmin)
    return r


def _pde_run(ec: ExperimentConfig, eps, horizon):
    grid = GridSpec(ec.surface, ec.n1, ec.n2)
    xi_h = canonical.lattice_xi_discrete(ec.config, grid, target=ec.xi_target)
    if ec.config.n:
        u0 = canonical.well_prepared_initial(ec.config, xi_h, eps, grid)
    else:
        u0 = canonical.reconstruct_canonical(ec.config, xi_h, grid)[0]
    res = flow.run(u0, eps, horizon, dt=ec.dt, snapshot_stride=ec.snapshot_stride)
    frames = [tracking.detect(f) for f in res.fields]
    tracks = tracking.track(frames, res.times, ec.surface, _collision_radius(ec, eps))
    return res, tracks, xi_h


def cmd_simulate_pde(ec: ExperimentConfig, out):
    if ec.surface.kind == SPHERE:
        raise ConfigError("surface.kind", "PDE is torus-only")
    eps = ec.eps_list[0]
    if ec.T is not None:
        horizon = ec.T
    else:
        traj, _ = _run_ode(ec)
        horizon = 0.5 * traj.t_star
    res, tracks, xi_h = _pde_run(ec, eps, horizon)
    meta = _base_meta(ec, eps=eps, provenance="pde", t_star=tracks.t_star, collided=tracks.collided)
    fileio.write_trajectory(os.path.join(out, f"{ec.prefix}_pde_tracks.csv"), tracks.times, tracks.positions, tracks.charges, meta)
    fileio.save_field(
        os.path.join(out, f"{ec.prefix}_pde_final_field.csv"),
        res.fields[-1],
        eps=eps,
        time=float(res.times[-1]),
        extra={"config_hash": ec.hash},
    )
    fileio.write_diagnostics(
        os.path.join(out, f"{ec.prefix}_pde_diagnostics.csv"),
        res.times,
        res.energy,
        res.dissipation,
        res.xi_proj,
        _base_meta(ec, eps=eps, provenance="pde", max_modulus=res.max_modulus),
    )
    print(f"pde: {len(tracks.times)} frames, T* = {tracks.t_star:.6g}, max|w| = {res.max_modulus:.12f}")
    return 0


def cmd_simulate_ode(ec: ExperimentConfig, out):
    traj, xi_ode = _run_ode(ec)
    meta = _base_meta(ec, provenance="ode", t_star=traj.t_star, collided=bool(traj.collided), xi0=list(map(float, np.atleast_1d(xi_ode))))
    fileio.write_trajectory(os.path.join(out, f"{ec.prefix}_ode_tracks.csv"), traj.times, traj.points, traj.charges, meta)
    xi_rows = traj.xis if traj.xis.size else np.zeros((len(traj.times), 0))
    fileio.write_diagnostics(
        os.path.join(out, f"{ec.prefix}_ode_diagnostics.csv"),
        traj.times,
        traj.energy,
        0.5 * np.pi * traj.kinetic_int + traj.grad_int / (2 * np.pi),
        xi_rows,
        _base_meta(ec, provenance="ode"),
    )
    print(f"ode: {len(traj.times)} frames, T* = {traj.t_star:.6g}, collided = {traj.collided}")
    return 0


def _match_tracks_to_ode(s, tracks, traj):
    """Index map track -> ODE vortex, by charge and initial proximity."""
    used = set()
    mapping = []
    for ti in range(len(tracks.charges)):
        best, best_d = None, np.inf
        for oi in range(len(traj.charges)):
            if oi in used or traj.charges[oi] != tracks.charges[ti]:
                continue
            d = float(s.geodesic_distance(tracks.positions[0][ti], traj.points[0][oi]))
            if d < best_d:
                best, best_d = oi, d
        if best is None:
            return None
        used.add(best)
        mapping.append(best)
    return mapping


def _compare_one(ec: ExperimentConfig, eps, traj):
    s = ec.surface
    res, tracks, xi_h = _pde_run(ec, eps, traj.t_star)
    mapping = _match_tracks_to_ode(s, tracks, traj)
    t_common = tracks.times[tracks.times <= min(tracks.t_star, traj.t_star) + 1e-15]
    devs, xi_devs = [], []
    for k, t in enumerate(t_common):
        ode_pos = traj.sample(t, s)
        total = sum(
            float(s.geodesic_distance(tracks.positions[k][ti], ode_pos[oi]))
            for ti, oi in enumerate(mapping)
        )
        devs.append(total)
        i_ode = int(np.searchsorted(traj.times, t + 1e-15) - 1)
        xi_ode_t = traj.xis[max(i_ode, 0)]
        if xi_ode_t.size:
            xi_devs.append(float(np.max(np.abs(res.xi_proj[k] - xi_ode_t))))
    balance = abs(res.energy[0] - res.energy[-1] - res.dissipation[-1])
    balance_rel = balance / max(res.dissipation[-1], 1e-300)
    return {
        "eps": eps,
        "D": float(np.max(devs)) if devs else float("nan"),
        "n_common_times": len(devs),
        "t_star_pde": tracks.t_star,
        "collided_pde": bool(tracks.collided),
        "xi_dev_sup": float(np.max(xi_devs)) if xi_devs else None,
        "energy_balance_rel": balance_rel,
        "max_modulus": res.max_modulus,
    }


def cmd_compare(ec: ExperimentConfig, out, threads=1):
    if ec.surface.kind == SPHERE:
        raise ConfigError("surface.kind", "PDE is torus-only")
    grid = GridSpec(ec.surface, ec.n1, ec.n2)
    xi_h = canonical.lattice_xi_discrete(ec.config, grid, target=ec.xi_target)
    traj, xi_ode = _run_ode(ec, xi_start=xi_h)
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(_compare_worker, [(ec, eps, traj) for eps in ec.eps_list]))
    else:
        rows = [_compare_one(ec, eps, traj) for eps in ec.eps_list]
    ds = [r["D"] for r in rows]
    monotone = None
    if len(ds) >= 2:
        monotone = bool(all(b < a for a, b in zip(ds, ds[1:])))
    report = {
        "config_hash": ec.hash,
        "surface": fileio.surface_meta(ec.surface),
        "grid": {"N1": ec.n1, "N2": ec.n2},
        "xi0_pde": list(map(float, np.atleast_1d(xi_h))),
        "xi0_ode": list(map(float, np.atleast_1d(xi_ode))),
        "t_star_ode": traj.t_star,
        "rows": rows,
        "D_monotone_decreasing": monotone,
    }
    fileio.write_report(os.path.join(out, f"{ec.prefix}_compare.json"), report)
    for r in rows:
        print(f"eps={r['eps']}: D = {r['D']:.6g} over {r['n_common_times']} times, balance_rel = {r['energy_balance_rel']:.3g}")
    print(f"D monotone decreasing: {monotone}")
    return 0


def _compare_worker(args):
    return _compare_one(*args)


def cmd_energy_expansion(ec: ExperimentConfig, out):
    if ec.surface.kind == SPHERE:
        raise ConfigError("surface.kind", "energy expansion is torus-only (PDE grid)")
    grid = GridSpec(ec.surface, ec.n1, ec.n2)
    xi_h = canonical.lattice_xi_discrete(ec.config, grid, target=ec.xi_target)
    eps_sorted = sorted(ec.eps_list, reverse=True)
    rows = canonical.energy_expansion(ec.config, xi_h, eps_sorted, grid)
    fileio.write_energy_table(
        os.path.join(out, f"{ec.prefix}_energy_expansion.csv"),
        rows,
        _base_meta(ec, provenance="energy-expansion"),
    )
    for r in rows:
        print(f"eps={r['eps']}: F = {r['F']:.6f}, R = {r['R']:.6f}")
    return 0


def cmd_green_table(ec: ExperimentConfig, out):
    from . import greens

    s = ec.surface
    rng = np.random.default_rng(ec.seed)
    rows = []
    for _ in range(24):
        x = s.random_point(rng, margin=0.2)
        y = s.random_point(rng, margin=0.2)
        if s.geodesic_distance(x, y) < 1e-3:
            continue
        g = float(greens.green_value(s, x, y))
        gn = float(np.linalg.norm(greens.green_grad_x(s, x, y)))
        if s.geodesic_distance(x, y) < 0.5 * s.injectivity_radius:
            h = float(greens.regular_part_H(s, x, y))
        else:
            h = float("nan")
        rows.append((x[0], x[1], y[0], y[1], g, gn, h))
    fileio.write_green_table(
        os.path.join(out, f"{ec.prefix}_green_table.csv"),
        rows,
        _base_meta(ec, provenance="green-table"),
    )
    print(f"green-table: {len(rows)} rows")
    return 0


# -- selftest -----------------------------------------------------------------


def _selftest_checks():
    """Fast in-package mirror of the module invariants; yields (name, ok)."""
    from . import greens, renorm
    from .fields import TangentField, vorticity_field
    from .surfaces import rotate90

    rng = np.random.default_rng(1)
    sp = Surface.sphere(1.3)
    tor = Surface.flat_torus(1.0, 0.8)

    # geometry
    p = sp.random_point(rng, margin=0.2)
    g, sg = sp.metric_at(p)
    yield "geometry.metric_spd", sg > 0 and abs(sg - sp.R**2 * np.sin(p[0])) < 1e-14
    q = sp.exp_map(p, np.array([0.3, -0.2]))
    v = sp.log_map(p, q)
    yield "geometry.exp_log_roundtrip", np.allclose(v, [0.3, -0.2], atol=1e-12)
    yield "geometry.rotate90_isometry", abs(np.linalg.norm(rotate90(v)) - np.linalg.norm(v)) < 1e-15
    yield "geometry.i_squared", np.allclose(rotate90(rotate90(v)), -v)
    # d A = kappa vol on a small quadrilateral
    th0, dph = 1.1, 1e-3
    hol = -(np.cos(th0 + dph) - np.cos(th0)) * dph
    area = sp.R**2 * (np.cos(th0) - np.cos(th0 + dph)) * dph
    yield "geometry.dA_equals_kappa_vol", abs(hol - sp.gauss_curvature() * area) < 1e-9 * abs(hol)

    # greens
    x, y = np.array([0.31, 0.17]), np.array([0.82, 0.55])
    sym = abs(greens.green_value(tor, x, y) - greens.green_value(tor, y, x))
    yield "greens.symmetry", sym < 1e-13
    val, bound = greens.eigen_sum_oracle(tor, x, y, 60)
    yield "greens.oracle_agreement", abs(val - float(greens.green_value(tor, x, y))) < 1e-9
    fd = (
        float(greens.green_value(tor, x, y + [0, 1e-5]))
        - float(greens.green_value(tor, x, y - [0, 1e-5]))
    ) / 2e-5
    yield "greens.sigma_fd", abs(greens.sigma_derivative(tor, x, y, [0, 1]) - fd) < 1e-6 * max(1, abs(fd))

    # renormalized energy: gradient vs FD of the continued energy
    c = VortexConfig(np.array([[0.2, 0.3], [0.6, 0.62]]), np.array([1, -1]))
    xi = renorm.nearest_lattice_xi(c, tor)
    grad = renorm.W_gradient(c, xi, tor)
    t = 1e-5
    ok = True
    for j in range(2):
        for e in (np.array([1.0, 0.0]), np.array([0.0, 1.0])):
            cp = c.replace_point(j, tor.exp_map(c.points[j], t * e))
            cm = c.replace_point(j, tor.exp_map(c.points[j], -t * e))
            fd = (
                renorm.W_value(cp, renorm.xi_continuation(c, xi, cp, tor), tor, "ignore")
                - renorm.W_value(cm, renorm.xi_continuation(c, xi, cm, tor), tor, "ignore")
            ) / (2 * t)
            ok = ok and abs(fd - grad[j] @ e) < 1e-5 * max(1.0, abs(fd))
    yield "renorm.constrained_gradient_fd", ok

    # canonical reconstruction and quantization
    grid = GridSpec(tor, 64, 64)
    xi_h = canonical.lattice_xi_discrete(c, grid)
    u, rep = canonical.reconstruct_canonical(c, xi_h, grid)
    yield "canonical.generator_residues", float(np.max(np.abs(rep.generator_residues))) < 1e-9
    yield "canonical.plaquette_residues", rep.max_plaquette_residue < 1e-9
    om = vorticity_field(u)
    charges = np.rint(om[np.abs(om) > np.pi] / (2 * np.pi)).astype(int)
    yield "canonical.winding_charges", sorted(charges.tolist()) == [-1, 1]

    # flow invariants at smoke scale
    grid2 = GridSpec(Surface.flat_torus(1.0, 1.0), 64, 64)
    ones = TangentField(grid2, np.ones((64, 64), dtype=complex))
    solver = flow.GLFlow(grid2, 0.08)
    stt = solver.initial_state(ones)
    for _ in range(100):
        stt = solver.step(stt)
    yield "flow.fixed_point", float(np.max(np.abs(stt.field.w - 1.0))) < 1e-12
    c2 = VortexConfig(np.array([[0.3, 0.5], [0.7, 0.5]]), np.array([1, -1]))
    gridf = GridSpec(Surface.flat_torus(1.0, 1.0), 128, 128)
    xi2 = canonical.lattice_xi_discrete(c2, gridf)
    u0 = canonical.well_prepared_initial(c2, xi2, 0.08, gridf)
    resf = flow.run(u0, 0.08, 0.006, dt=0.5 * flow.default_dt(0.08), snapshot_stride=8)
    yield "flow.max_principle", resf.max_modulus <= 1 + 1e-12
    bal = abs(resf.energy[0] - resf.energy[-1] - resf.dissipation[-1]) / max(resf.dissipation[-1], 1e-300)
    yield "flow.energy_balance", bal < 0.01
    yield "flow.monotone", resf.monotonicity_flags == 0

    # ode invariants
    ca = VortexConfig(np.array([[np.pi / 2, 0.3], [np.pi / 2, 0.3 + np.pi]]), np.array([1, 1]))
    tra = ode.integrate(ca, np.zeros(0), Surface.sphere(1.0), T=0.5, dt=2e-2)
    drift = max(
        float(Surface.sphere(1.0).geodesic_distance(tra.points[-1][j], ca.points[j])) for j in range(2)
    )
    yield "ode.antipodal_stationary", drift < 1e-8
    trb = ode.integrate(c2, nearest_lattice_xi(c2, Surface.flat_torus(1.0, 1.0)), Surface.flat_torus(1.0, 1.0), T=0.004, dt=2e-4)
    drop = trb.energy[0] - trb.energy[-1]
    yield "ode.energy_balance", abs(trb.balance_residual()) < 0.01 * max(drop, 1e-300)
    yield "ode.energy_descent", bool(np.all(np.diff(trb.energy) <= 1e-10))

    # tracking
    dets = tracking.detect(u0)
    yield "tracking.dipole_detected", sorted(d.charge for d in dets) == [-1, 1]


def cmd_selftest():
    failures = 0
    for name, ok in _selftest_checks():
        print(f"{'PASS' if ok else 'FAIL'} {name}")
        failures += 0 if ok else 1
    print(f"selftest: {failures} failure(s)")
    return 0 if failures == 0 else 1


def main(argv=None):
    ap = argparse.ArgumentParser(prog="vortexflow", description=__doc__)
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)
    for name in ("simulate-pde", "simulate-ode", "compare", "energy-expansion", "green-table"):
        p = sub.add_parser(name)
        p.add_argument("--config", required=True)
        p.add_argument("--out", default=".")
        p.add_argument("--threads", type=int, default=int(os.environ.get("VORTEXFLOW_THREADS", "1")))
    sub.add_parser("selftest")
    sub.add_parser("example-config")
    args = ap.parse_args(argv)

    try:
        if args.command == "selftest":
            return cmd_selftest()
        if args.command == "example-config":
            print(example_config(), end="")
            return 0
        ec = load_config(args.config)
        os.makedirs(args.out, exist_ok=True)
        if args.command == "simulate-pde":
            return cmd_simulate_pde(ec, args.out)
        if args.command == "simulate-ode":
            return cmd_simulate_ode(ec, args.out)
        if args.command == "compare":
            return cmd_compare(ec, args.out, threads=args.threads)
        if args.command == "energy-expansion":
            return cmd_energy_expansion(ec, args.out)
        if args.command == "green-table":
            return cmd_green_table(ec, args.out)
        raise ConfigError("command", f"unknown command {args.command}")
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    except DivergenceError as e:
        print(f"numerical divergence: {e}", file=sys.stderr)
        return 3
    except VortexflowError as e:
        print(f"invariant failure: {e}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
