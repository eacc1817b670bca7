"""Shared exception types."""


class InvalidParameterError(ValueError):
    """A parameter lies outside the domain an operation is defined on."""


class QuadratureFailure(RuntimeError):
    """Adaptive quadrature did not reach the requested tolerance."""


class SizeLimitError(ValueError):
    """A combinatorial computation was requested beyond its size cap."""


class SingularSystemError(RuntimeError):
    """A moment linear system has a vanishing pivot."""


class InsufficientPathError(ValueError):
    """A path is too short for the requested time-average estimate."""


class EventRateOverflowError(ValueError):
    """Truncation level would generate more jump events than the budget allows."""


class HeavyTailWarning(UserWarning):
    """Estimator variance is near-divergent; error bars are unreliable."""
