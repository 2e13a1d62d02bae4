from __future__ import annotations


class NumericalError(RuntimeError):
    """Base for failures of the numerics rather than of the inputs."""


class SingularMatrixError(NumericalError):
    pass


class SingularEstimatorError(NumericalError):
    pass


class NotPositiveSemidefiniteError(NumericalError):
    pass


class UndefinedSignalError(ValueError):
    """Measured power does not exceed the noise floor."""
