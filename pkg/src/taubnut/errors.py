"""Exception types shared across the package."""


class ParameterError(ValueError):
    """Metric parameters violate positivity constraints."""


class CoordinateError(ValueError):
    """A point lies outside the domain of a coordinate routine."""


class NumericalError(RuntimeError):
    """Solver failure, under-resolution, or step-size underflow."""
