"""Exception hierarchy shared by all modules."""


class ShapeDynamicsError(Exception):
    """Base class for every error raised by pureshape."""


class DegenerateInput(ShapeDynamicsError, ValueError):
    pass


class TotalCollision(ShapeDynamicsError, ValueError):
    pass


class CollisionSingularity(ShapeDynamicsError):
    pass


class ConstraintViolation(ShapeDynamicsError):
    """The energy constraint 1 + eps^2 + 2C/kappa = 0 can no longer be met."""


class StepSizeUnderflow(ShapeDynamicsError):
    pass


class ResolutionExceeded(ShapeDynamicsError):
    pass


class AmplitudeFloorBreach(ShapeDynamicsError):
    pass


class KappaUnderflow(ShapeDynamicsError):
    pass


class RegimeViolation(ShapeDynamicsError):
    pass


class Inconclusive(ShapeDynamicsError):
    pass


class IncompatibleCharts(ShapeDynamicsError):
    pass


class ConfigError(ShapeDynamicsError, ValueError):
    """Invalid run configuration; ``path`` names the offending field."""

    def __init__(self, path, message):
        super().__init__(f"{path}: {message}")
        self.path = path
