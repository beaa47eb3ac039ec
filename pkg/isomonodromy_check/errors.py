"""
Named failures raised by the verification pipeline
"""


class IsomonodromyError(Exception):
    """Base class for every failure raised by this package"""


## Domain violations ###########################################################


class PoleError(IsomonodromyError, ValueError):
    """A phase or time variable sits on the singular set of a Hamiltonian"""


class ZeroTimeError(PoleError):
    """A time coordinate that appears in a denominator is zero"""


class PathClearanceError(PoleError):
    """An integration segment passes too close to a singular time"""


class GaugeZero(IsomonodromyError, ValueError):
    """The gauge scalar u vanished where it is used as a denominator"""


class SpectralPole(IsomonodromyError, ValueError):
    """A spectral point coincides with a pole of the Lax matrix"""


class CoincidentSpectral(SpectralPole):
    """The two spectral arguments of the kernel are too close together"""


class MapPole(SpectralPole):
    """A spectral point lies on the pole of the x = zeta / (zeta - 1) map"""


class JacobianSingular(IsomonodromyError, ValueError):
    """The (x, y) -> (r, rho) map has a vanishing Jacobian"""


class ConstraintViolation(IsomonodromyError, ValueError):
    """A parameter set breaks the linking constraints the kernel equations need"""


class ConfigError(IsomonodromyError, ValueError):
    """A run config could not be read or did not match the schema"""


## Numerical breakdown #########################################################


class StepFailure(IsomonodromyError, ArithmeticError):
    """The adaptive integrator could not complete a segment"""


class BranchAmbiguity(IsomonodromyError, ArithmeticError):
    """A square root cannot be continued unambiguously between grid nodes"""


class PathDependence(IsomonodromyError, ArithmeticError):
    """Two integration paths to the same node disagree beyond tolerance"""


class SingularZ(IsomonodromyError, ArithmeticError):
    """A fundamental solution sample is not invertible"""
