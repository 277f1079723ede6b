"""Canonical harmonic fields and well-prepared initial data.

The canonical field for (a, d, xi) is the unit-norm field whose current is
d*Psi(a, d) + xi, where the 2-form Psi solves -Delta Psi = 2 pi sum d_j
delta_{a_j} - kappa vol with zero mean.  We store Psi through its Hodge-dual
scalar psi and reconstruct the phase by integrating d theta = j + A along a
spanning tree of the grid, auditing every plaquette circulation and (on the
torus) the two generator-loop holonomies.  The generator audit is the sharp
existence test: it passes iff xi lies on the admissible lattice.

Torus: psi lives at cell centers and is obtained by an FFT solve of the
five-point Laplacian, so every plaquette circulation of the discrete edge
form equals its prescribed cell charge exactly (to FFT roundoff).  Vortex
charges are mollified onto the four surrounding cells with bilinear weights,
which preserves total mass and first moments exactly.

Sphere: the current has the closed form

    j = sum_j d_j (1 + cos(rho_j/R))/2 dphi_j

in geodesic polar coordinates (rho_j, phi_j) about each vortex, obtained by
rotating the gradient of the Green superposition.  Edge integrals split into
an exact azimuth increment plus a smooth remainder integrated by Gauss
quadrature; in the far hemisphere of a vortex the whole integrand is smooth
and is quadratured directly.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy.fft import fft2, ifft2

from . import greens
from .errors import LatticeViolationError, ResolutionError
from .fields import GridSpec, TangentField
from .renorm import VortexConfig, require_admissible
from .surfaces import SPHERE, TORUS, wrap_angle

log = logging.getLogger(__name__)

PLAQUETTE_TOL = 1e-6
GENERATOR_TOL = 1e-6
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(8)


@dataclass
class PsiGrid:
    """Hodge-dual scalar of the 2-form Psi; zero mean."""

    grid: GridSpec
    values: np.ndarray
    location: str  # "cells" (torus DEC solve) or "nodes" (sphere superposition)


@dataclass
class ReconstructionReport:
    max_plaquette_residue: float
    generator_residues: np.ndarray
    generator_row: int = -1
    generator_col: int = -1


def nudge_off_nodes(c: VortexConfig, grid: GridSpec):
    """Shift any vortex sitting exactly on a grid node by half a cell."""
    s = grid.surface
    pts = c.points.copy()
    moved = False
    for j in range(c.n):
        if s.kind == TORUS:
            f1 = pts[j, 0] / grid.h1
            f2 = pts[j, 1] / grid.h2
        else:
            f1 = pts[j, 0] / grid.h1 - 0.5
            f2 = pts[j, 1] / grid.h2
        if abs(f1 - round(f1)) < 1e-9 and abs(f2 - round(f2)) < 1e-9:
            pts[j, 0] += grid.h1 / 2
            pts[j, 1] += grid.h2 / 2
            moved = True
    if moved:
        log.warning("vortex on a grid node; nudged by h/2")
        return VortexConfig(s.reduce_point(pts), c.charges.copy())
    return c


def cell_charges(c: VortexConfig, grid: GridSpec, mode="bilinear"):
    """Vortex masses 2 pi d_j deposited on torus cells.

    mode "bilinear": mollified onto the four surrounding cells with bilinear
    weights (mass and first moments exact; used by the Poisson solve).
    mode "cell": the full mass to the single containing cell, which keeps the
    discrete winding quantized; phase reconstruction requires this, at the
    price of an O(h) quantization of the vortex position.
    """
    if grid.surface.kind != TORUS:
        raise ValueError("cell charges are built on the torus grid")
    q = np.zeros((grid.N1, grid.N2))
    for j in range(c.n):
        f1 = c.points[j, 0] / grid.h1 - 0.5
        f2 = c.points[j, 1] / grid.h2 - 0.5
        if mode == "cell":
            i_c = int(np.floor(c.points[j, 0] / grid.h1)) % grid.N1
            j_c = int(np.floor(c.points[j, 1] / grid.h2)) % grid.N2
            q[i_c, j_c] += 2 * np.pi * c.charges[j]
            continue
        i0, j0 = int(np.floor(f1)), int(np.floor(f2))
        t1, t2 = f1 - i0, f2 - j0
        for di, wi in ((0, 1 - t1), (1, t1)):
            for dj, wj in ((0, 1 - t2), (1, t2)):
                q[(i0 + di) % grid.N1, (j0 + dj) % grid.N2] += 2 * np.pi * c.charges[j] * wi * wj
    return q


def _dec_symbol(grid):
    k1 = np.arange(grid.N1)
    k2 = np.arange(grid.N2)
    s1 = -4 * np.sin(np.pi * k1 / grid.N1) ** 2 / grid.h1**2
    s2 = -4 * np.sin(np.pi * k2 / grid.N2) ** 2 / grid.h2**2
    return s1[:, None] + s2[None, :]


def _spectral_symbol(grid):
    s = grid.surface
    k1 = 2 * np.pi * np.fft.fftfreq(grid.N1, d=grid.h1)
    k2 = 2 * np.pi * np.fft.fftfreq(grid.N2, d=grid.h2)
    return -(k1[:, None] ** 2) - k2[None, :] ** 2


def solve_Psi(c: VortexConfig, grid: GridSpec, symbol="dec") -> PsiGrid:
    """Zero-mean scalar psi with -Delta psi = 2 pi sum d_j delta_{a_j} - kappa.

    Torus: FFT Poisson solve on cell centers against mollified deltas; the
    "dec" symbol (five-point Laplacian) makes plaquette circulations of the
    derived edge form exact, the "spectral" symbol gives the truncated-Fourier
    continuum solution.  Sphere: pointwise Green superposition on nodes.
    """
    require_admissible(c, grid.surface)
    c = nudge_off_nodes(c, grid)
    s = grid.surface
    if s.kind == TORUS:
        rhs = cell_charges(c, grid) / (grid.h1 * grid.h2)  # includes the 2 pi
        lam = _dec_symbol(grid) if symbol == "dec" else _spectral_symbol(grid)
        rhs_hat = fft2(rhs)
        lam[0, 0] = 1.0
        psi_hat = rhs_hat / (-lam)  # -Delta psi = rhs
        psi_hat[0, 0] = 0.0
        psi = np.real(ifft2(psi_hat))
        return PsiGrid(grid, psi, "cells")
    pts = grid.node_points()
    psi = np.zeros(grid.shape)
    for j in range(c.n):
        psi += 2 * np.pi * c.charges[j] * greens.green_value(s, pts, c.points[j])
    psi -= np.sum(psi * grid.node_area) / np.sum(grid.node_area)
    return PsiGrid(grid, psi, "nodes")


# -- edge targets -------------------------------------------------------------


def _torus_edge_targets(c, xi, grid):
    """Integrated values of j = d*Psi + xi over x- and y-edges plus the
    prescribed plaquette content and the discrete generator offsets.

    Uses whole-cell vortex masses: the discrete winding stays quantized only
    if each plaquette carries an integer multiple of 2 pi.
    """
    q = cell_charges(c, grid, mode="cell")
    rhs = q / (grid.h1 * grid.h2)
    lam = _dec_symbol(grid)
    lam[0, 0] = 1.0
    rhs_hat = fft2(rhs)
    psi_hat = rhs_hat / (-lam)
    psi_hat[0, 0] = 0.0
    psi = np.real(ifft2(psi_hat))
    xi = np.asarray(xi, dtype=float)
    h1, h2 = grid.h1, grid.h2
    tx = (h1 / h2) * (psi - np.roll(psi, 1, axis=1))  # cell above minus below
    ty = -(h2 / h1) * (psi - np.roll(psi, 1, axis=0))
    if xi.size:
        tx = tx + xi[0] * h1
        ty = ty + xi[1] * h2
    return tx, ty, q


def _clear_row_col(c, grid):
    """Generator row/column staying clear of all mollified vortex cells."""
    if c.n == 0:
        return 0, 0
    fy = c.points[:, 1] / grid.h2
    fx = c.points[:, 0] / grid.h1
    js = np.arange(grid.N2)
    dist_row = np.min(np.abs(wrap_angle(2 * np.pi * (js[:, None] - fy[None, :]) / grid.N2)) * grid.N2 / (2 * np.pi), axis=1)
    is_ = np.arange(grid.N1)
    dist_col = np.min(np.abs(wrap_angle(2 * np.pi * (is_[:, None] - fx[None, :]) / grid.N1)) * grid.N1 / (2 * np.pi), axis=1)
    return int(np.argmax(dist_row)), int(np.argmax(dist_col))


def zeta_discrete(c: VortexConfig, grid: GridSpec):
    """Generator holonomies of the discrete d*Psi (the grid-level zeta)."""
    require_admissible(c, grid.surface)
    tx, ty, _ = _torus_edge_targets(c, np.zeros(2), grid)
    row, col = _clear_row_col(c, grid)
    return np.array([float(np.sum(tx[:, row])), float(np.sum(ty[col, :]))])


def lattice_xi_discrete(c: VortexConfig, grid: GridSpec, target=None):
    """Element of the grid-level lattice closest to a target form.

    Differs from the continuum lattice by O(h^2); reconstruction holonomies
    vanish identically for these elements.
    """
    s = grid.surface
    if s.kind == SPHERE:
        return np.zeros(0)
    if target is None:
        target = np.zeros(2)
    z = zeta_discrete(c, grid)
    at = np.array([target[0] * s.L1, target[1] * s.L2])
    m = np.round((at + z) / (2 * np.pi))
    periods = 2 * np.pi * m - z
    return np.array([periods[0] / s.L1, periods[1] / s.L2])


def _sphere_edge_targets(c, grid):
    """Integrated values of j + A over theta- and phi-edges (sphere).

    Per vortex, hemisphere split: near side uses the exact azimuth increment
    minus a smooth Gauss-quadrature correction, far side a direct quadrature.
    """
    s = grid.surface
    R = s.R
    th, ph = grid.coord1, grid.coord2
    N1, N2 = grid.N1, grid.N2

    def quad_points(p_start, tangent_kind):
        # p_start: (..., 2) chart start points; returns chart points at
        # Gauss nodes along the edge and the arclength weights
        if tangent_kind == "theta":
            length = R * grid.h1
            frac = (_GL_NODES + 1) / 2
            pts = np.empty(p_start.shape[:-1] + (8, 2))
            pts[..., 0] = p_start[..., 0:1] + frac * grid.h1
            pts[..., 1] = p_start[..., 1:2]
        else:
            length = (R * np.sin(p_start[..., 0]) * grid.h2)[..., None]
            frac = (_GL_NODES + 1) / 2
            pts = np.empty(p_start.shape[:-1] + (8, 2))
            pts[..., 0] = p_start[..., 0:1]
            pts[..., 1] = p_start[..., 1:2] + frac * grid.h2
        w = _GL_WEIGHTS / 2  # integral over the unit parameter interval
        return pts, w, length

    nodes = grid.node_points()
    th_start = nodes[:-1, :, :]
    ph_start = nodes
    t_theta = np.zeros((N1 - 1, N2))
    t_phi = np.zeros((N1, N2))

    for j in range(c.n):
        a = c.points[j]
        d = float(c.charges[j])
        # exact azimuth increments between edge endpoints
        _, az = s.polar_around(a, nodes)
        rho_mid_t, _ = s.polar_around(a, 0.5 * (nodes[:-1] + nodes[1:]))
        daz_t = wrap_angle(az[1:, :] - az[:-1, :])
        mid_phi = nodes.copy()
        mid_phi[..., 1] += grid.h2 / 2
        rho_mid_p, _ = s.polar_around(a, mid_phi)
        daz_p = wrap_angle(np.roll(az, -1, axis=1) - az)

        for kind, start, rho_mid, daz, target in (
            ("theta", th_start, rho_mid_t, daz_t, t_theta),
            ("phi", ph_start, rho_mid_p, daz_p, t_phi),
        ):
            pts, wq, length = quad_points(start, kind)
            rho, _ = s.polar_around(a, pts)
            z = rho / R
            # unit radial direction away from a, frame components at pts
            n_a = s._embed(a)
            n_x = s._embed(pts)
            dot = np.clip(np.sum(n_x * n_a, axis=-1), -1.0, 1.0)
            u = dot[..., None] * n_x - n_a
            norm_u = np.maximum(np.linalg.norm(u, axis=-1), 1e-300)
            u = u / norm_u[..., None]
            e1, e2 = s._frame(pts)
            nu1 = np.sum(u * e1, axis=-1)
            nu2 = np.sum(u * e2, axis=-1)
            # dphi_a(tangent) = (i nu, tangent)_g / (R sin z)
            inu_t = -nu2 if kind == "theta" else nu1
            dphi_a = inu_t / (R * np.maximum(np.sin(z), 1e-300))
            near = rho_mid < 0.5 * np.pi * R
            # near: d * (daz - int (1-cos)/2 dphi_a); far: d * int (1+cos)/2 dphi_a
            corr = np.sum(wq * 0.5 * (1 - np.cos(z)) * dphi_a, axis=-1) * (
                length if kind == "theta" else length[..., 0]
            )
            full = np.sum(wq * 0.5 * (1 + np.cos(z)) * dphi_a, axis=-1) * (
                length if kind == "theta" else length[..., 0]
            )
            target += d * np.where(near, daz - corr, full)

    t_phi = t_phi + grid.conn_y  # int of A; theta-edges carry none
    # prescribed plaquette content: 2 pi per enclosed vortex
    expected = np.zeros((N1 - 1, N2))
    for j in range(c.n):
        i = int(np.searchsorted(th, c.points[j, 0]) - 1)
        jj = int(np.floor(c.points[j, 1] / grid.h2)) % N2
        if 0 <= i < N1 - 1:
            expected[i, jj] += 2 * np.pi * c.charges[j]
        else:
            raise ResolutionError("vortex inside a polar cap; refine the grid")
    return t_theta, t_phi, expected


def reconstruct_canonical(c: VortexConfig, xi, grid: GridSpec, tol=GENERATOR_TOL):
    """Canonical harmonic field for (a, d, xi) on the grid.

    Returns (TangentField, ReconstructionReport).  Raises
    LatticeViolationError (carrying the wrapped residues) when the generator
    holonomies are off the 2 pi lattice, i.e. when xi is not in L(a, d).
    """
    require_admissible(c, grid.surface)
    s = grid.surface
    c = nudge_off_nodes(c, grid)
    if s.kind == TORUS:
        tx, ty, expected = _torus_edge_targets(c, xi, grid)
        circ = tx + np.roll(ty, -1, axis=0) - np.roll(tx, -1, axis=1) - ty
        row, col = _clear_row_col(c, grid)
        residues = wrap_angle(np.array([np.sum(tx[:, row]), np.sum(ty[col, :])]))
        plaq = float(np.max(np.abs(wrap_angle(circ - expected))))
        report = ReconstructionReport(plaq, residues, row, col)
        if np.max(np.abs(residues)) > tol:
            raise LatticeViolationError(residues)
        theta = np.zeros(grid.shape)
        theta[0, :] = np.concatenate([[0.0], np.cumsum(ty[0, : grid.N2 - 1])])
        theta[1:, :] = theta[0, :] + np.cumsum(tx[: grid.N1 - 1, :], axis=0)
    else:
        t_theta, t_phi, expected = _sphere_edge_targets(c, grid)
        circ = t_theta + t_phi[1:, :] - np.roll(t_theta, -1, axis=1) - t_phi[:-1, :]
        plaq = float(np.max(np.abs(wrap_angle(circ - expected))))
        report = ReconstructionReport(plaq, np.zeros(0))
        theta = np.zeros(grid.shape)
        theta[0, :] = np.concatenate([[0.0], np.cumsum(t_phi[0, : grid.N2 - 1])])
        theta[1:, :] = theta[0, :] + np.cumsum(t_theta, axis=0)
    if report.max_plaquette_residue > PLAQUETTE_TOL:
        raise LatticeViolationError(
            np.array([report.max_plaquette_residue]), "plaquette circulation off the target"
        )
    return TangentField(grid, np.exp(1j * theta)), report


def well_prepared_initial(c: VortexConfig, xi, eps, grid: GridSpec) -> TangentField:
    """Initial data u0 = tanh(dist/eps) * u_canonical around each vortex.

    The tanh core profile is a design choice for the recovery sequence; it is
    smooth, monotone and vanishes at the right rate, so |u0| <= 1 and each
    core carries its prescribed index.
    """
    s = grid.surface
    hmax = max(grid.h1, grid.h2) if s.kind == TORUS else max(s.R * grid.h1, s.R * grid.h2)
    if eps < 2 * hmax:
        raise ResolutionError(f"eps = {eps} below 2h = {2 * hmax}")
    star, _ = reconstruct_canonical(c, xi, grid)
    w = star.w.copy()
    pts = grid.node_points()
    for j in range(c.n):
        w *= np.tanh(s.geodesic_distance(pts, c.points[j]) / eps)
    return TangentField(grid, w)


def energy_expansion(c: VortexConfig, xi, eps_list, grid: GridSpec, w_value=None):
    """Table of R(eps) = F_eps(u0_eps) - pi n |log eps| - W(a, d, xi).

    eps_list must be decreasing and resolved by the grid.  R stabilizes as
    eps -> 0; R/n is the profile-dependent core-energy surrogate.
    """
    from .fields import gl_energy
    from .renorm import W_value

    eps_list = list(eps_list)
    if any(b >= a for a, b in zip(eps_list, eps_list[1:])):
        raise ValueError("eps_list must be strictly decreasing")
    n = c.n
    w = W_value(c, xi, grid.surface, lattice_policy="warn") if w_value is None else w_value
    rows = []
    for eps in eps_list:
        if n == 0:
            rows.append({"eps": eps, "F": 0.0, "core_log": 0.0, "W": 0.0, "R": 0.0})
            continue
        u0 = well_prepared_initial(c, xi, eps, grid)
        f_eps, _ = gl_energy(u0, eps)
        core = np.pi * n * abs(np.log(eps))
        rows.append({"eps": eps, "F": f_eps, "core_log": core, "W": w, "R": f_eps - core - w})
    return rows
