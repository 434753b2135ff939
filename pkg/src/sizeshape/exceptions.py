"""Exception types raised by the package."""


class DegenerateConfigurationError(ValueError):
    """Pre-form is rank deficient, so its rotation is not unique."""


class DegenerateConstraintError(ValueError):
    """Reference coefficient block is rank deficient; identification is not unique."""


class NumericalError(ArithmeticError):
    """A matrix that must be positive definite failed its Cholesky factorization."""


class DataFormatError(ValueError):
    """Malformed input file; the message names the offending row or field."""
