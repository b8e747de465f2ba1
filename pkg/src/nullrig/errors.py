"""Exception hierarchy."""


class NullrigError(Exception):
    """Base class for all engine errors."""


class DomainError(NullrigError, ValueError):
    """Point outside the chart or model domain."""


class DegenerateMetricError(NullrigError, ValueError):
    pass


class DegeneratePlaneError(NullrigError, ValueError):
    pass


class PreconditionError(NullrigError, ValueError):
    pass


class RiggingError(NullrigError, ValueError):
    """Rigging is tangent to the hypersurface (or otherwise invalid)."""


class VertexError(DomainError):
    """Evaluation at (or too close to) a cone vertex."""


class OutsideConeDomainError(DomainError):
    pass


class IntervalExitError(DomainError):
    def __init__(self, message, parameter=None):
        super().__init__(message)
        self.parameter = parameter


class ConvergenceError(NullrigError, RuntimeError):
    pass


class ConfigError(NullrigError, ValueError):
    pass
