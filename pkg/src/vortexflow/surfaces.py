"""Exact geometry of the two model surfaces.

Supported surfaces are the round sphere of radius R and the flat rectangular
torus [0,L1) x [0,L2).  Both have constant Gauss curvature, which is what the
rest of the package relies on (it makes the curvature potential vanish).

Conventions, fixed once and documented here:

* Orientation: vol = sqrt|g| dx^1 ^ dx^2, with the frames below positively
  oriented.
* Torus chart (x, y) in [0,L1) x [0,L2); frame tau1 = d/dx, tau2 = d/dy;
  connection 1-form A == 0.
* Sphere chart (theta, phi), colatitude theta in (0, pi), longitude phi in
  [0, 2*pi); frame tau1 = (1/R) d/dtheta, tau2 = (1/(R sin theta)) d/dphi;
  connection 1-form A = -cos(theta) dphi, the sign fixed by dA = kappa vol.
* rotate90 acts on frame components as (v1, v2) -> (-v2, v1); flipping the
  orientation would flip all vortex charges consistently.

Points are float arrays of shape (..., 2) holding chart coordinates; tangent
vectors are float arrays of shape (..., 2) holding components in the
orthonormal frame at their base point (so the Euclidean norm of the component
array is the Riemannian norm).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ChartError, InjectivityError

SPHERE = "sphere"
TORUS = "torus"

_POLE_TOL = 1e-12


def rotate90(v):
    """Rotation by +90 degrees in the oriented orthonormal frame: i v."""
    v = np.asarray(v, dtype=float)
    out = np.empty_like(v)
    out[..., 0] = -v[..., 1]
    out[..., 1] = v[..., 0]
    return out


@dataclass(frozen=True)
class Surface:
    """One of the two model surfaces, with its fixed chart and frame."""

    kind: str
    R: float = 0.0
    L1: float = 0.0
    L2: float = 0.0

    @staticmethod
    def sphere(R=1.0):
        if R <= 0:
            raise ValueError("sphere radius must be positive")
        return Surface(kind=SPHERE, R=float(R))

    @staticmethod
    def flat_torus(L1=1.0, L2=1.0):
        if L1 <= 0 or L2 <= 0:
            raise ValueError("torus periods must be positive")
        return Surface(kind=TORUS, L1=float(L1), L2=float(L2))

    # -- global invariants ---------------------------------------------------

    @property
    def euler_characteristic(self):
        return 2 if self.kind == SPHERE else 0

    @property
    def genus(self):
        return 0 if self.kind == SPHERE else 1

    @property
    def volume(self):
        if self.kind == SPHERE:
            return 4.0 * np.pi * self.R**2
        return self.L1 * self.L2

    @property
    def injectivity_radius(self):
        if self.kind == SPHERE:
            return np.pi * self.R
        return 0.5 * min(self.L1, self.L2)

    @property
    def diameter(self):
        if self.kind == SPHERE:
            return np.pi * self.R
        return float(np.hypot(self.L1 / 2.0, self.L2 / 2.0))

    # -- chart handling --------------------------------------------------------

    def reduce_point(self, p):
        """Return p with torus coordinates wrapped into [0,L1) x [0,L2).

        On the sphere only checks the colatitude range; raises ChartError at
        the poles (the chart excludes them by contract).
        """
        p = np.asarray(p, dtype=float)
        if self.kind == TORUS:
            out = np.empty_like(p)
            out[..., 0] = np.mod(p[..., 0], self.L1)
            out[..., 1] = np.mod(p[..., 1], self.L2)
            return out
        theta = p[..., 0]
        if np.any(theta <= _POLE_TOL) or np.any(theta >= np.pi - _POLE_TOL):
            raise ChartError("sphere chart point at or beyond a pole")
        out = np.empty_like(p)
        out[..., 0] = theta
        out[..., 1] = np.mod(p[..., 1], 2.0 * np.pi)
        return out

    def metric_at(self, p):
        """Coordinate metric g_jk at p and sqrt(det g).

        Returns (g, sqrtg) with g of shape (..., 2, 2).
        """
        p = self.reduce_point(p)
        base = np.broadcast(p[..., 0])
        g = np.zeros(base.shape + (2, 2))
        if self.kind == TORUS:
            g[..., 0, 0] = 1.0
            g[..., 1, 1] = 1.0
            sqrtg = np.ones(base.shape)
        else:
            theta = p[..., 0]
            g[..., 0, 0] = self.R**2
            g[..., 1, 1] = (self.R * np.sin(theta)) ** 2
            sqrtg = self.R**2 * np.sin(theta)
        if base.shape == ():
            return g.reshape(2, 2), float(sqrtg)
        return g, sqrtg

    def gauss_curvature(self, p=None):
        """Constant Gauss curvature (1/R^2 on the sphere, 0 on the torus)."""
        if self.kind == SPHERE:
            return 1.0 / self.R**2
        return 0.0

    def connection_form_at(self, p):
        """Chart components (A_1, A_2) of the frame connection 1-form at p."""
        p = self.reduce_point(p)
        out = np.zeros(np.asarray(p).shape)
        if self.kind == SPHERE:
            out[..., 1] = -np.cos(p[..., 0])
        return out

    # -- sphere embedding helpers ---------------------------------------------

    def _embed(self, p):
        """Unit position vectors in R^3 for sphere chart points, shape (...,3)."""
        theta, phi = p[..., 0], p[..., 1]
        st = np.sin(theta)
        return np.stack([st * np.cos(phi), st * np.sin(phi), np.cos(theta)], axis=-1)

    def _frame(self, p):
        """Frame vectors tau1, tau2 at p as unit vectors in R^3."""
        theta, phi = p[..., 0], p[..., 1]
        ct, st = np.cos(theta), np.sin(theta)
        cp, sp = np.cos(phi), np.sin(phi)
        e_theta = np.stack([ct * cp, ct * sp, -st], axis=-1)
        e_phi = np.stack([-sp, cp, np.zeros_like(sp)], axis=-1)
        return e_theta, e_phi

    def _from_xyz(self, n):
        """Chart point of a unit vector in R^3, colatitude clamped off the poles."""
        nz = np.clip(n[..., 2], -1.0, 1.0)
        theta = np.arccos(nz)
        theta = np.clip(theta, 1e2 * _POLE_TOL, np.pi - 1e2 * _POLE_TOL)
        phi = np.mod(np.arctan2(n[..., 1], n[..., 0]), 2.0 * np.pi)
        return np.stack([theta, phi], axis=-1)

    # -- distances, exp and log ------------------------------------------------

    def wrap_displacement(self, p, q):
        """Torus-only: the minimal representative of q - p, shape (..., 2)."""
        if self.kind != TORUS:
            raise ChartError("wrap_displacement is a torus operation")
        d = np.asarray(q, dtype=float) - np.asarray(p, dtype=float)
        out = np.empty_like(d)
        out[..., 0] = (d[..., 0] + self.L1 / 2.0) % self.L1 - self.L1 / 2.0
        out[..., 1] = (d[..., 1] + self.L2 / 2.0) % self.L2 - self.L2 / 2.0
        return out

    def geodesic_distance(self, p, q):
        """Geodesic distance; broadcasts over leading axes of p and q."""
        p = np.asarray(p, dtype=float)
        q = np.asarray(q, dtype=float)
        if self.kind == TORUS:
            d = self.wrap_displacement(p, q)
            return np.hypot(d[..., 0], d[..., 1])
        np_, nq = self._embed(p), self._embed(q)
        dot = np.sum(np_ * nq, axis=-1)
        cross = np.linalg.norm(np.cross(np_, nq), axis=-1)
        # atan2 form: well conditioned at both tiny and near-antipodal ranges
        return self.R * np.arctan2(cross, dot)

    def exp_map(self, p, v):
        """Point reached from p along the geodesic with initial velocity v
        (frame components), after unit time."""
        p = self.reduce_point(p)
        v = np.asarray(v, dtype=float)
        if self.kind == TORUS:
            return self.reduce_point(p + v)
        s = np.linalg.norm(v, axis=-1)
        n = self._embed(p)
        e1, e2 = self._frame(p)
        small = s < 1e-300
        s_safe = np.where(small, 1.0, s)
        vhat = (v[..., :1] * e1 + v[..., 1:] * e2) / s_safe[..., None]
        arc = s / self.R
        out = np.cos(arc)[..., None] * n + np.sin(arc)[..., None] * vhat
        out = np.where(small[..., None], n, out)
        return self._from_xyz(out)

    def log_map(self, p, q):
        """Frame components at p of the inverse exponential of q.

        Requires dist(p, q) strictly inside the injectivity radius.
        """
        p = self.reduce_point(p)
        q = self.reduce_point(q)
        if self.kind == TORUS:
            d = self.wrap_displacement(p, q)
            r = np.hypot(d[..., 0], d[..., 1])
            if np.any(r >= self.injectivity_radius * (1.0 - 1e-12)):
                raise InjectivityError("torus log_map beyond min(L1,L2)/2")
            return d
        n_p, n_q = self._embed(p), self._embed(q)
        dot = np.clip(np.sum(n_p * n_q, axis=-1), -1.0, 1.0)
        arc = np.arccos(dot)
        if np.any(arc >= np.pi * (1.0 - 1e-12)):
            raise InjectivityError("sphere log_map at the antipode")
        u = n_q - dot[..., None] * n_p
        norm_u = np.linalg.norm(u, axis=-1)
        small = norm_u < 1e-300
        u = u / np.where(small, 1.0, norm_u)[..., None]
        e1, e2 = self._frame(p)
        s = self.R * arc
        v1 = s * np.sum(u * e1, axis=-1)
        v2 = s * np.sum(u * e2, axis=-1)
        out = np.stack([v1, v2], axis=-1)
        return np.where(small[..., None], np.zeros_like(out), out)

    def transport(self, p, q, v):
        """Parallel transport of v from T_p to T_q along the minimal geodesic."""
        if self.kind == TORUS:
            return np.asarray(v, dtype=float).copy()
        p = self.reduce_point(p)
        q = self.reduce_point(q)
        v = np.asarray(v, dtype=float)
        n_p, n_q = self._embed(p), self._embed(q)
        e1p, e2p = self._frame(p)
        w = v[..., :1] * e1p + v[..., 1:] * e2p
        c = np.sum(n_p * n_q, axis=-1)[..., None]
        axis = np.cross(n_p, n_q)
        s2 = np.sum(axis * axis, axis=-1)[..., None]
        # Rodrigues rotation taking n_p to n_q; identity when p == q.
        w_rot = np.where(
            s2 < 1e-30,
            w,
            c * w
            + np.cross(axis, w)
            + np.sum(axis * w, axis=-1)[..., None] * axis * (1.0 - c) / np.where(s2 < 1e-30, 1.0, s2),
        )
        e1q, e2q = self._frame(q)
        return np.stack(
            [np.sum(w_rot * e1q, axis=-1), np.sum(w_rot * e2q, axis=-1)], axis=-1
        )

    def polar_around(self, center, p):
        """Geodesic polar data of points p around center: (rho, azimuth).

        The azimuth is the angle of log_center(p) in the frame at center.
        Used for canonical-field construction and core profiles; on the sphere
        the antipode of center has rho = pi*R and an arbitrary azimuth.
        """
        p = np.asarray(p, dtype=float)
        if self.kind == TORUS:
            d = self.wrap_displacement(center, p)
            return np.hypot(d[..., 0], d[..., 1]), np.arctan2(d[..., 1], d[..., 0])
        n_c = self._embed(np.asarray(center, dtype=float))
        n_p = self._embed(p)
        dot = np.clip(np.sum(n_c * n_p, axis=-1), -1.0, 1.0)
        rho = self.R * np.arccos(dot)
        u = n_p - dot[..., None] * n_c
        e1, e2 = self._frame(np.asarray(center, dtype=float))
        return rho, np.arctan2(np.sum(u * e2, axis=-1), np.sum(u * e1, axis=-1))

    def random_point(self, rng, margin=0.0):
        """Uniform random chart point; sphere points keep a colatitude margin."""
        if self.kind == TORUS:
            return np.array([rng.uniform(0.0, self.L1), rng.uniform(0.0, self.L2)])
        lo, hi = np.cos(np.pi - margin), np.cos(margin)
        z = rng.uniform(lo, hi)
        return np.array([np.arccos(z), rng.uniform(0.0, 2.0 * np.pi)])


def wrap_angle(x):
    """Wrap to (-pi, pi]."""
    x = np.asarray(x, dtype=float)
    out = np.mod(-x + np.pi, 2.0 * np.pi)
    return -(out - np.pi)
