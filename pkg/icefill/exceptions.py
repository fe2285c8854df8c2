__all__ = [
    "InvalidInputError",
    "NumericError",
    "ConfigError",
    "UnknownMethodError",
    "BoundNotApplicableError",
]


class InvalidInputError(ValueError):
    """Raised when an operation receives arguments outside its preconditions."""
    def __init__(self, what, reason):
        """Set the error message with the offending operation and the reason."""
        message = f"Invalid input for {what}: {reason}."
        super().__init__(message)

class NumericError(ArithmeticError):
    """Raised when a factorization or determinant fails numerically."""
    def __init__(self, what, reason):
        """Set the error message with the failing computation and the reason."""
        message = f"Numeric failure in {what}: {reason}."
        super().__init__(message)

class ConfigError(ValueError):
    """Raised when an experiment configuration is malformed or inconsistent."""
    def __init__(self, reason):
        """Set the error message with the configuration problem."""
        message = f"Configuration error: {reason}."
        super().__init__(message)

class UnknownMethodError(ConfigError):
    """Raised when a designer, estimator, kernel or analysis method name is not known."""
    def __init__(self, name, choices):
        """Set the error message with the unknown name and the accepted ones."""
        super().__init__(f"unknown method '{name}', expected one of {', '.join(choices)}")

class BoundNotApplicableError(ValueError):
    """Raised when the water-filling/ice-filling gap bound is requested outside its regime."""
    def __init__(self, reason):
        """Set the error message with the violated condition."""
        message = f"Gap bound not applicable: {reason}."
        super().__init__(message)
