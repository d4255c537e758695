"""Exception hierarchy shared by all modules."""


class CavityError(Exception):
    """Base class for every error raised by this package."""


class GeometryError(CavityError, ValueError):
    """Invalid cavity geometry or mode input."""


class SpectralError(CavityError, ArithmeticError):
    """Root bracketing or convergence failure in the eigenfrequency solver."""


class DegenerateGeometryError(SpectralError):
    """Poles of the two cotangents coincide.

    The transcendental equation is derived by dividing through by f(b), so
    modes with a node on the mirror are invisible to it.  Commensurate
    cavity lengths produce exactly such modes.
    """


class ResonanceError(CavityError, ValueError):
    """Drive frequency incompatible with the requested resonance."""


class IntegrationError(CavityError, ArithmeticError):
    """Time-domain integration lost symplecticity or exceeded its budget."""


class ScenarioError(CavityError, ValueError):
    """Malformed scenario file or sweep specification."""
