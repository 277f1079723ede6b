"""Renormalized energy of a vortex configuration, its lattice of admissible
harmonic forms, and the constrained gradient.

For points a_1..a_n with integer charges d_j summing to the Euler
characteristic, and a harmonic 1-form xi, the interaction energy is

    W(a, d, xi) = 4 pi^2 sum_{j<k} d_j d_k G(a_j, a_k)
                + 2 pi^2 sum_j d_j^2 H(a_j, a_j)
                + 1/2 int |xi|^2

(the curvature-potential terms vanish identically on the supported
constant-curvature surfaces).  Its gradient in a_j, taken along the unique
continuous selection of xi in the admissible lattice, is

    grad_j W = 2 pi d_j ( grad S_j(a_j) + 2 pi d_j grad H(a_j, a_j)
                          + i xi_sharp(a_j) ),
    S_j = 2 pi sum_{k != j} d_k G(., a_k).

Harmonic 1-forms on the flat torus are xi = xi1 dx + xi2 dy, stored as the
coefficient vector (xi1, xi2); on the sphere the space is trivial and all
coefficient vectors are empty.

Generator curves are the coordinate circles gamma_1 = {y = y0} and
gamma_2 = {x = x0} at fixed generic offsets.  The period map is then
alpha(xi) = (xi1 L1, xi2 L2), and the lattice offsets have the closed form

    zeta_1 = -2 pi sum_j d_j (1/2 - frac((y0 - a_jy)/L2)),
    zeta_2 = -2 pi sum_j d_j (frac((x0 - a_jx)/L1) - 1/2),

obtained by integrating the Ewald Fourier series of star dG(., a_j) along the
circles term by term (only the modes constant along the circle survive and
they sum to a sawtooth).  A quadrature cross-check lives in the test suite.
zeta jumps by 2 pi d_j when a_j crosses a generator curve; continuity along
configuration paths is restored by unwrapping, which is what makes the
continued form well defined.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import greens
from .errors import AdmissibilityError, SingularityError
from .surfaces import SPHERE, Surface, rotate90, wrap_angle

DUPLICATE_TOL = 1e-9
LATTICE_TOL = 1e-6
# generic generator-curve offsets (fractions of the periods), shifted if a
# vortex happens to sit on a curve
GENERATOR_FRACTIONS = (0.381966011250105, 0.618033988749895)
_OFFSET_CLEARANCE = 1e-6


@dataclass
class VortexConfig:
    """n surface points with integer charges."""

    points: np.ndarray  # (n, 2) chart coordinates
    charges: np.ndarray  # (n,) integers

    def __post_init__(self):
        self.points = np.atleast_2d(np.asarray(self.points, dtype=float))
        self.charges = np.atleast_1d(np.asarray(self.charges, dtype=int))
        if self.points.shape != (self.charges.size, 2):
            raise ValueError("points must be (n, 2) with n matching charges")

    @property
    def n(self):
        return self.charges.size

    def reduced(self, s: Surface):
        return VortexConfig(s.reduce_point(self.points), self.charges.copy())

    def replace_point(self, j, p):
        pts = self.points.copy()
        pts[j] = p
        return VortexConfig(pts, self.charges.copy())


def check_admissible(c: VortexConfig, s: Surface):
    """Typed violation report; empty means admissible."""
    violations = []
    total = int(np.sum(c.charges))
    if total != s.euler_characteristic:
        violations.append(
            ("total_charge", f"sum of charges {total} != Euler characteristic {s.euler_characteristic}")
        )
    for j in range(c.n):
        for k in range(j + 1, c.n):
            if s.geodesic_distance(c.points[j], c.points[k]) < DUPLICATE_TOL:
                violations.append(("duplicate_point", f"points {j} and {k} coincide"))
    return violations


def require_admissible(c: VortexConfig, s: Surface):
    violations = check_admissible(c, s)
    if violations:
        raise AdmissibilityError(violations)


def harmonic_dim(s: Surface):
    return 2 * s.genus


def alpha_map(s: Surface, xi):
    """Generator periods alpha(xi) of a harmonic form, = (xi1 L1, xi2 L2)."""
    xi = np.asarray(xi, dtype=float)
    if s.kind == SPHERE:
        return np.zeros(0)
    return np.array([xi[0] * s.L1, xi[1] * s.L2])


def alpha_inverse(s: Surface, periods):
    periods = np.asarray(periods, dtype=float)
    if s.kind == SPHERE:
        return np.zeros(0)
    return np.array([periods[0] / s.L1, periods[1] / s.L2])


def xi_l2_norm_sq(s: Surface, xi):
    """int_M |xi|^2 vol_g; exactly Vol (xi1^2 + xi2^2) on the flat torus."""
    xi = np.asarray(xi, dtype=float)
    if xi.size == 0:
        return 0.0
    return s.volume * float(np.sum(xi**2))


def generator_offsets(c: VortexConfig, s: Surface):
    """Offsets (y0, x0) of the generator circles, nudged off every vortex."""
    y0 = GENERATOR_FRACTIONS[0] * s.L2
    x0 = GENERATOR_FRACTIONS[1] * s.L1
    for _ in range(64):
        if np.all(np.abs(wrap_angle(2 * np.pi * (y0 - c.points[:, 1]) / s.L2)) * s.L2 / (2 * np.pi) > _OFFSET_CLEARANCE):
            break
        y0 = (y0 + 0.0134771 * s.L2) % s.L2
    for _ in range(64):
        if np.all(np.abs(wrap_angle(2 * np.pi * (x0 - c.points[:, 0]) / s.L1)) * s.L1 / (2 * np.pi) > _OFFSET_CLEARANCE):
            break
        x0 = (x0 + 0.0134771 * s.L1) % s.L1
    return y0, x0


def zeta_offsets(c: VortexConfig, s: Surface, offsets=None):
    """Lattice offsets zeta(a, d) along the generator circles, in radians.

    Returned as plain reals (a fixed representative of the mod-2pi class);
    sphere configurations give the empty vector.
    """
    require_admissible(c, s)
    if s.kind == SPHERE:
        return np.zeros(0)
    y0, x0 = offsets if offsets is not None else generator_offsets(c, s)
    d = c.charges.astype(float)
    fy = np.mod(y0 - c.points[:, 1], s.L2) / s.L2
    fx = np.mod(x0 - c.points[:, 0], s.L1) / s.L1
    z1 = -2 * np.pi * float(np.sum(d * (0.5 - fy)))
    z2 = -2 * np.pi * float(np.sum(d * (fx - 0.5)))
    return np.array([z1, z2])


def lattice_contains(xi, c: VortexConfig, s: Surface, tol=LATTICE_TOL):
    """Whether alpha(xi) + zeta(a, d) lies on the 2 pi lattice.

    Returns (contained, residues) with residues wrapped to (-pi, pi].
    """
    require_admissible(c, s)
    if s.kind == SPHERE:
        return True, np.zeros(0)
    res = wrap_angle(alpha_map(s, xi) + zeta_offsets(c, s))
    return bool(np.max(np.abs(res)) < tol), res


def nearest_lattice_xi(c: VortexConfig, s: Surface, target=None):
    """The lattice element closest to a target form (componentwise)."""
    if s.kind == SPHERE:
        return np.zeros(0)
    if target is None:
        target = np.zeros(2)
    z = zeta_offsets(c, s)
    at = alpha_map(s, target)
    m = np.round((at + z) / (2 * np.pi))
    return alpha_inverse(s, 2 * np.pi * m - z)


def zeta_continuous(c0: VortexConfig, zeta0, c1: VortexConfig, s: Surface, _depth=0):
    """zeta at c1 on the continuous branch through (c0, zeta0).

    Unwraps along the straight chart path from c0 to c1, subdividing until
    every increment is below pi/2; raises if the path leaves the admissible
    class.
    """
    if s.kind == SPHERE:
        return np.zeros(0)
    z1 = zeta_offsets(c1, s)
    step = wrap_angle(z1 - zeta0)
    if np.max(np.abs(step)) < np.pi / 2:
        return zeta0 + step
    if _depth > 48:
        raise AdmissibilityError([("path", "zeta continuation failed to converge")])
    mid_pts = s.reduce_point(c0.points + 0.5 * s.wrap_displacement(c0.points, c1.points))
    mid = VortexConfig(mid_pts, c0.charges.copy())
    z_mid = zeta_continuous(c0, zeta0, mid, s, _depth + 1)
    return zeta_continuous(mid, z_mid, c1, s, _depth + 1)


def xi_continuation(c0: VortexConfig, xi0, c1: VortexConfig, s: Surface):
    """The unique continuous lattice selection Xi with Xi(c0) = xi0, at c1.

    Solves alpha Xi(c1) + zeta(c1) = alpha xi0 + zeta(c0) with zeta tracked
    continuously along the straight chart path.
    """
    require_admissible(c0, s)
    if s.kind == SPHERE:
        return np.zeros(0)
    z0 = zeta_offsets(c0, s)
    z1 = zeta_continuous(c0, z0, c1, s)
    return alpha_inverse(s, alpha_map(s, xi0) + z0 - z1)


def xi_derivative(c: VortexConfig, s: Surface, j, v):
    """Directional derivative of the lattice selection Xi at c, for a motion
    of vortex j with velocity v.

    The generator periods of the derivative are 2 pi d_j int_gamma star
    d sigma(., a_j, v); on the flat torus they reduce in closed form to
    (2 pi d_j / Vol) (v2, -v1) for the coefficient vector.
    """
    require_admissible(c, s)
    if s.kind == SPHERE:
        return np.zeros(0)
    v = np.asarray(v, dtype=float)
    d = float(c.charges[j])
    return (2 * np.pi * d / s.volume) * np.array([v[1], -v[0]])


# -- W and its constrained gradient -----------------------------------------

_H_DIAG_CACHE: dict = {}


def _h_diag(s: Surface):
    """H(a, a): constant over a by homogeneity of both model surfaces."""
    key = (s.kind, s.R, s.L1, s.L2)
    if key not in _H_DIAG_CACHE:
        ref = np.array([np.pi / 2, 0.1]) if s.kind == SPHERE else np.array([0.0, 0.0])
        _H_DIAG_CACHE[key] = (
            greens.regular_H_diag(s, ref),
            greens.regular_gradH_diag(s, ref),
        )
    return _H_DIAG_CACHE[key]


def _check_xi(c, s, xi, policy):
    if policy == "ignore" or s.kind == SPHERE:
        return
    ok, res = lattice_contains(xi, c, s)
    if not ok:
        import logging

        msg = f"xi is off the lattice L(a, d); residues {res}"
        if policy == "warn":
            logging.getLogger(__name__).warning(msg)
        else:
            raise ValueError(msg)


def W_value(c: VortexConfig, xi, s: Surface, lattice_policy="warn"):
    """Renormalized energy W(a, d, xi)."""
    require_admissible(c, s)
    _check_xi(c, s, xi, lattice_policy)
    d = c.charges.astype(float)
    total = 0.0
    for j in range(c.n):
        for k in range(j + 1, c.n):
            dist = s.geodesic_distance(c.points[j], c.points[k])
            if dist <= DUPLICATE_TOL:
                raise SingularityError("coincident vortices in W")
            total += 4 * np.pi**2 * d[j] * d[k] * float(greens.green_value(s, c.points[j], c.points[k]))
    h_diag, _ = _h_diag(s)
    total += 2 * np.pi**2 * float(np.sum(d**2)) * h_diag
    total += 0.5 * xi_l2_norm_sq(s, xi)
    return total


def W_gradient(c: VortexConfig, xi, s: Surface, lattice_policy="warn"):
    """Constrained gradient of W in the vortex positions, shape (n, 2).

    The xi contribution enters analytically through the i xi_sharp term; it
    is never obtained by differencing the continuation numerically.
    """
    require_admissible(c, s)
    _check_xi(c, s, xi, lattice_policy)
    d = c.charges.astype(float)
    _, grad_h = _h_diag(s)
    out = np.zeros((c.n, 2))
    xi = np.asarray(xi, dtype=float)
    for j in range(c.n):
        grad_s = np.zeros(2)
        for k in range(c.n):
            if k == j:
                continue
            grad_s += 2 * np.pi * d[k] * greens.green_grad_x(s, c.points[j], c.points[k])
        term = grad_s + 2 * np.pi * d[j] * grad_h
        if xi.size:
            term = term + rotate90(xi)  # flat metric: xi_sharp has components xi
        out[j] = 2 * np.pi * d[j] * term
    return out
