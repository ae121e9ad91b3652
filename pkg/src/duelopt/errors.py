class ParameterError(ValueError):
    """Raised when an argument or configuration violates a precondition."""
