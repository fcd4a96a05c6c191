"""Exception hierarchy.

``ConfigError`` covers malformed or invalid inputs at the configuration
level; ``DomainError`` and its subclasses cover numeric and physical-domain
failures raised by the computational modules.
"""


class GemplError(Exception):
    """Base class for all package errors."""


class ConfigError(GemplError, ValueError):
    """Invalid configuration document, key or value."""


class DomainError(GemplError, ValueError):
    """Input outside the domain of a formula or numeric method."""


class GeometryError(DomainError):
    """Ill-formed geometric input, e.g. a curve that does not close."""


class AxisSingularityError(DomainError):
    """Evaluation on the symmetry axis where a field is singular."""


class SingularMetricError(DomainError):
    """A metric component that must be nonzero vanishes."""


class StepSizeError(DomainError):
    """Integration step too large for the fastest rate in the problem."""


class DetuningError(DomainError):
    """Frequency-matching condition violated beyond a linewidth."""


class NumericalError(DomainError):
    """Non-finite state encountered during integration."""

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial
