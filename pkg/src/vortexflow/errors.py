"""Exception types shared across the package."""


class VortexflowError(Exception):
    """Base class for all package-specific errors."""


class ChartError(VortexflowError):
    """A chart-based operation was requested at a chart singularity
    (sphere poles) or with coordinates outside the admissible range."""


class InjectivityError(VortexflowError):
    """log_map (or a related inverse) requested beyond the injectivity radius."""


class SingularityError(VortexflowError):
    """Evaluation at (or too close to) a singular configuration, e.g.
    coincident points of a Green-function kernel."""


class AdmissibilityError(VortexflowError):
    """A vortex configuration violates the admissibility constraints."""

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(v[1] for v in self.violations))


class LatticeViolationError(VortexflowError):
    """Canonical reconstruction failed its holonomy audit.

    Carries the offending generator residues (radians, wrapped to (-pi, pi])."""

    def __init__(self, residues, message="holonomy residues off the 2*pi lattice"):
        self.residues = residues
        super().__init__(f"{message}: {residues}")


class ResolutionError(VortexflowError):
    """Core size, time step or separation below what the grid resolves."""


class LowModulusError(VortexflowError):
    """A loop-index query ran over nodes with |w| < 1/2, where the discrete
    index is not meaningful; the caller must enlarge the loop."""


class DivergenceError(VortexflowError):
    """Time stepping produced NaN/overflow."""

    def __init__(self, step, message="numerical divergence"):
        self.step = step
        super().__init__(f"{message} at step {step}")


class StiffnessError(VortexflowError):
    """ODE step-size halving cascade exceeded its budget."""


class ConfigError(VortexflowError):
    """Malformed experiment configuration; carries the field name."""

    def __init__(self, field, message):
        self.field = field
        super().__init__(f"config field '{field}': {message}")
