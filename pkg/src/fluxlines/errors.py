"""Exception and warning types shared across the solver pipeline."""


class FluxlinesError(Exception):
    """Base class for all solver failures."""


class ConfigError(FluxlinesError):
    """Invalid configuration or problem data (CLI exit code 2)."""


class NumericalError(FluxlinesError):
    """A numerical stage failed to produce a usable result (CLI exit code 3)."""


class EnergyTooLow(NumericalError):
    """Requested energy level does not exceed the potential supremum, so the
    travel-cost density sqrt(E - V) is not real-valued everywhere."""


class DescentStall(NumericalError):
    """Gradient descent through the arrival field stopped making progress."""


class SingularIntegrand(NumericalError):
    """E - V <= 0 at a quadrature sample of a time-of-flight integral."""


class SingularDensity(NumericalError):
    """E - V vanishes somewhere on an arc, so the arc density is singular."""


class ShootingDiverged(NumericalError):
    """No launch angle in the search bracket reached the target endpoint."""


class BracketFailure(NumericalError):
    """Energy search exceeded the bracket cap without the objective turning over."""


class Unbalanced(NumericalError):
    """Transport marginals do not balance within tolerance."""


class TooLarge(FluxlinesError):
    """Instance exceeds the size cap of the exhaustive transport oracle."""


class MassDefect(NumericalError):
    """Assembled measure mass deviates from 1 beyond the allowed defect,
    signalling a stationarity failure upstream."""


class BoundaryContact(UserWarning):
    """The wavefront or an extracted path reached the domain-box margin;
    geodesics may be clipped."""
