"""Ginzburg-Landau vortex dynamics for tangent vector fields on surfaces.

Simulates the rescaled GL heat flow on the flat torus, integrates the limiting
gradient flow of the renormalized vortex-interaction energy on the sphere and
the torus, and cross-checks the two together with the static energy expansion
and the geometric identities the construction rests on.
"""

__version__ = "0.1.0"

from .surfaces import Surface, rotate90  # noqa: F401
from .fields import GridSpec, TangentField, OneFormGrid  # noqa: F401
from .renorm import VortexConfig  # noqa: F401
