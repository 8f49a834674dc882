"""Exception types raised across the package."""

import numpy as np


class ValidationError(ValueError):
    """Input violates a structural precondition."""


class InvalidDimensionError(ValidationError):
    pass


class SingularityError(np.linalg.LinAlgError):
    """A resolvent or average propagator was requested at (or next to) a pole."""

    def __init__(self, message, eigenvalue=None):
        super().__init__(message)
        self.eigenvalue = eigenvalue


class DegeneratePoleError(ValueError):
    pass


class DegenerateStationaryStateError(np.linalg.LinAlgError):
    def __init__(self, message, member=None):
        super().__init__(message)
        self.member = member


class StabilityError(RuntimeError):
    pass


class StabilityWarning(RuntimeWarning):
    pass


class ToleranceError(RuntimeError):
    """A numerical cross-check exceeded its pinned tolerance (strict mode)."""
