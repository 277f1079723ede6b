"""Discrete tangent fields on a periodic grid and their first-order invariants.

A tangent field is stored as one complex amplitude per node, w = u1 + i u2 in
the fixed orthonormal frame of the surface, so |w| is the Riemannian norm.

Grids: the torus grid is fully periodic with nodes x_i = i h1, y_j = j h2.
The sphere grid is cell-centered in colatitude (theta_i = (i + 1/2) pi/N1, so
no node sits on a pole) and periodic in longitude.  The two polar caps are not
covered by plaquettes; their curvature content is accounted for analytically
where a global budget is needed.

Discretization conventions:

* covariant differences are gauge-covariant: along an edge p -> q the
  derivative is (w(q) U - w(p)) / len with U = exp(-i int_edge A), which keeps
  sphere and torus code identical (A enters only through edge integrals);
* the discrete current stores edge-midpoint frame components,
  j_e = Im(conj(w_p) w_q U) / len, exact to O(h^2) and exactly quadratic in
  the modulus (j(rho u) = rho^2 j(u) for constant rho);
* the discrete vorticity uses the XY-model plaquette convention: phase
  increments minus edge connection integrals, wrapped to (-pi, pi], summed
  around the plaquette, plus kappa * (cell area).  Because the connection
  integrals sum to exactly kappa * area over every plaquette, each cell value
  is an exact integer multiple of 2 pi (up to float roundoff) whenever w has
  no zeros on nodes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import LowModulusError
from .surfaces import SPHERE, TORUS, Surface, wrap_angle


@dataclass
class GridSpec:
    """Node layout for one of the two surfaces; N1 x N2 nodes."""

    surface: Surface
    N1: int
    N2: int

    def __post_init__(self):
        if self.N1 < 16 or self.N2 < 16:
            raise ValueError("grids below 16 nodes per direction are not supported")
        s = self.surface
        if s.kind == TORUS:
            self.h1 = s.L1 / self.N1
            self.h2 = s.L2 / self.N2
            self.coord1 = np.arange(self.N1) * self.h1
            self.coord2 = np.arange(self.N2) * self.h2
        else:
            self.h1 = np.pi / self.N1
            self.h2 = 2 * np.pi / self.N2
            self.coord1 = (np.arange(self.N1) + 0.5) * self.h1
            self.coord2 = np.arange(self.N2) * self.h2
        self._build()

    def _build(self):
        s = self.surface
        N1, N2 = self.N1, self.N2
        if s.kind == TORUS:
            self.len_x = np.full((N1, N2), self.h1)
            self.len_y = np.full((N1, N2), self.h2)
            self.conn_x = np.zeros((N1, N2))
            self.conn_y = np.zeros((N1, N2))
            self.node_area = np.full((N1, N2), self.h1 * self.h2)
            self.cell_area = np.full((N1, N2), self.h1 * self.h2)
            self.n_cells1 = N1
        else:
            R = s.R
            th = self.coord1
            self.len_x = np.full((N1 - 1, N2), R * self.h1)
            self.len_y = np.repeat((R * np.sin(th) * self.h2)[:, None], N2, axis=1)
            self.conn_x = np.zeros((N1 - 1, N2))
            self.conn_y = np.repeat((-np.cos(th) * self.h2)[:, None], N2, axis=1)
            band = R**2 * (np.cos(np.maximum(th - 0.5 * self.h1, 0.0)) - np.cos(np.minimum(th + 0.5 * self.h1, np.pi))) * self.h2
            self.node_area = np.repeat(band[:, None], N2, axis=1)
            cell_band = R**2 * (np.cos(th[:-1]) - np.cos(th[1:])) * self.h2
            self.cell_area = np.repeat(cell_band[:, None], N2, axis=1)
            self.n_cells1 = N1 - 1

    @property
    def shape(self):
        return (self.N1, self.N2)

    def node_points(self):
        """Chart coordinates of all nodes, shape (N1, N2, 2)."""
        c1, c2 = np.meshgrid(self.coord1, self.coord2, indexing="ij")
        return np.stack([c1, c2], axis=-1)

    def cell_centers(self):
        """Chart coordinates of plaquette centers, shape (n_cells1, N2, 2)."""
        s = self.surface
        if s.kind == TORUS:
            c1 = self.coord1 + 0.5 * self.h1
            c2 = self.coord2 + 0.5 * self.h2
        else:
            c1 = 0.5 * (self.coord1[:-1] + self.coord1[1:])
            c2 = self.coord2 + 0.5 * self.h2
        a, b = np.meshgrid(c1, c2, indexing="ij")
        return np.stack([a, b], axis=-1)

    def cap_areas(self):
        """Areas of the two polar caps not covered by plaquettes (sphere)."""
        if self.surface.kind == TORUS:
            return 0.0, 0.0
        R = self.surface.R
        a = 2 * np.pi * R**2 * (1.0 - np.cos(self.coord1[0]))
        b = 2 * np.pi * R**2 * (1.0 - np.cos(np.pi - self.coord1[-1]))
        return a, b


@dataclass
class TangentField:
    """Complex frame amplitude per node."""

    grid: GridSpec
    w: np.ndarray

    def __post_init__(self):
        self.w = np.asarray(self.w, dtype=complex)
        if self.w.shape != self.grid.shape:
            raise ValueError(f"field shape {self.w.shape} != grid {self.grid.shape}")
        if not np.all(np.isfinite(self.w.view(float))):
            raise ValueError("tangent field contains non-finite values")

    def copy(self):
        return TangentField(self.grid, self.w.copy())


@dataclass
class OneFormGrid:
    """Edge-midpoint frame components of a 1-form on the grid edges."""

    grid: GridSpec
    jx: np.ndarray  # along tau1 edges: (N1, N2) torus, (N1-1, N2) sphere
    jy: np.ndarray  # along tau2 edges: (N1, N2)

    @staticmethod
    def constant(grid, coeffs):
        """The constant (harmonic) form xi1 dx + xi2 dy on the torus grid."""
        xi = np.asarray(coeffs, dtype=float)
        return OneFormGrid(
            grid,
            np.full((grid.N1, grid.N2), xi[0]),
            np.full((grid.N1, grid.N2), xi[1]),
        )


def _edge_pairs(grid, w):
    """Endpoint values (w_p, w_q) along x- and y-edges."""
    if grid.surface.kind == TORUS:
        wxp, wxq = w, np.roll(w, -1, axis=0)
    else:
        wxp, wxq = w[:-1, :], w[1:, :]
    wyp, wyq = w, np.roll(w, -1, axis=1)
    return wxp, wxq, wyp, wyq


def covariant_differences(u: TangentField):
    """Gauge-covariant edge differences (Dx, Dy), frame components per edge."""
    g = u.grid
    wxp, wxq, wyp, wyq = _edge_pairs(g, u.w)
    ux = np.exp(-1j * g.conn_x)
    uy = np.exp(-1j * g.conn_y)
    return (wxq * ux - wxp) / g.len_x, (wyq * uy - wyp) / g.len_y


def current_j(u: TangentField) -> OneFormGrid:
    """Discrete current j(u): edge components Im(conj(w_p) w_q U) / len."""
    g = u.grid
    wxp, wxq, wyp, wyq = _edge_pairs(g, u.w)
    jx = np.imag(np.conj(wxp) * wxq * np.exp(-1j * g.conn_x)) / g.len_x
    jy = np.imag(np.conj(wyp) * wyq * np.exp(-1j * g.conn_y)) / g.len_y
    return OneFormGrid(g, jx, jy)


def phase_increments(u: TangentField):
    """Wrapped covariant phase increments per edge (the XY-model link angles)."""
    g = u.grid
    wxp, wxq, wyp, wyq = _edge_pairs(g, u.w)
    dx = wrap_angle(np.angle(wxq) - np.angle(wxp) - g.conn_x)
    dy = wrap_angle(np.angle(wyq) - np.angle(wyp) - g.conn_y)
    return dx, dy


def _plaquette_circulation(grid, ex, ey):
    """Oriented plaquette sums of edge values (ex, ey)."""
    if grid.surface.kind == TORUS:
        return ex + np.roll(ey, -1, axis=0) - np.roll(ex, -1, axis=1) - ey
    return ex + ey[1:, :] - np.roll(ex, -1, axis=1) - ey[:-1, :]


def vorticity_field(u: TangentField):
    """Discrete vorticity, one value per plaquette (2-form mass per cell).

    Wrapped phase circulation plus kappa * cell area; an exact multiple of
    2 pi on every cell for fields without node zeros.
    """
    g = u.grid
    dx, dy = phase_increments(u)
    circ = _plaquette_circulation(g, dx, dy)
    return circ + g.surface.gauss_curvature() * g.cell_area


def loop_index(u: TangentField, window):
    """Index of u on the boundary of a rectangular node window.

    window = (i0, i1, j0, j1): nodes i0..i1 x j0..j1 (inclusive, modular on
    periodic directions).  Requires |w| >= 1/2 on the boundary nodes.
    Returns the integer sum of the enclosed cell windings.
    """
    g = u.grid
    i0, i1, j0, j1 = window
    n1 = g.N1
    if g.surface.kind == SPHERE:
        if not (0 <= i0 < i1 < n1):
            raise ValueError("sphere windows cannot wrap in colatitude")
        irange = np.arange(i0, i1 + 1)
    else:
        irange = np.arange(i0, i1 + 1) % n1
    jrange = np.arange(j0, j1 + 1) % g.N2
    border_i = np.concatenate([irange, irange, np.full(jrange.size, irange[0]), np.full(jrange.size, irange[-1])])
    border_j = np.concatenate([np.full(irange.size, jrange[0]), np.full(irange.size, jrange[-1]), jrange, jrange])
    mods = np.abs(u.w[border_i, border_j])
    if np.any(mods < 0.5):
        raise LowModulusError("|w| < 1/2 on the loop; enlarge the window")
    omega = vorticity_field(u)
    kappa = g.surface.gauss_curvature()
    cells_i = (np.arange(i0, i1) % n1) if g.surface.kind == TORUS else np.arange(i0, i1)
    cells_j = np.arange(j0, j1) % g.N2
    winding = (omega - kappa * g.cell_area)[np.ix_(cells_i, cells_j)]
    return int(np.rint(np.sum(winding) / (2 * np.pi)))


def gl_energy(u: TangentField, eps):
    """Ginzburg-Landau energy F_eps(u) and its nodal density.

    Midpoint quadrature of 1/2 |Du|^2 + (1/(4 eps^2)) (|u|^2 - 1)^2 with the
    covariant differences above; returns (total, density array).
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    g = u.grid
    dx, dy = covariant_differences(u)
    pot = (np.abs(u.w) ** 2 - 1.0) ** 2 / (4 * eps**2)
    adx2 = np.abs(dx) ** 2
    ady2 = np.abs(dy) ** 2
    density = pot.copy()
    if g.surface.kind == TORUS:
        density += 0.25 * (adx2 + np.roll(adx2, 1, axis=0) + ady2 + np.roll(ady2, 1, axis=1))
    else:
        dens_x = np.zeros_like(pot)
        dens_x[:-1, :] += 0.25 * adx2
        dens_x[1:, :] += 0.25 * adx2
        # boundary rows carry a single theta-edge; keep their full half-weight
        dens_x[0, :] += 0.25 * adx2[0, :]
        dens_x[-1, :] += 0.25 * adx2[-1, :]
        density += dens_x + 0.25 * (ady2 + np.roll(ady2, 1, axis=1))
    total = float(np.sum(density * g.node_area))
    return total, density


def harmonic_projection(j: OneFormGrid):
    """L2 projection of a grid 1-form onto harmonic forms.

    Flat torus: coefficients of xi = xi1 dx + xi2 dy, computed as the mean of
    the edge components per direction (exact for constant forms; this is our
    discrete choice for the continuum projector).  Sphere: empty vector.
    """
    if j.grid.surface.kind == SPHERE:
        return np.zeros(0)
    return np.array([float(np.mean(j.jx)), float(np.mean(j.jy))])


def total_vorticity(u: TangentField):
    """Global vorticity budget: sum of cell values plus, on the sphere, the
    wrapped winding of the two cap rings and the caps' curvature content."""
    g = u.grid
    omega = vorticity_field(u)
    total = float(np.sum(omega))
    if g.surface.kind == SPHERE:
        dx, dy = phase_increments(u)
        kappa = g.surface.gauss_curvature()
        a_n, a_s = g.cap_areas()
        # 2 pi * index of each cap: its ring holonomy plus its curvature content
        total += float(np.sum(dy[0, :])) + kappa * a_n
        total += -float(np.sum(dy[-1, :])) + kappa * a_s
    return total
