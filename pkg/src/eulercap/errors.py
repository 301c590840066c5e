"""Exception types shared across the package."""


class ValidationError(ValueError):
    """Invalid input: shapes, ranges, conventions or malformed files."""


class DegeneracyError(ArithmeticError):
    """Input is well-formed but the requested quantity is undefined on it
    (zero variance, vanishing denominators, kernel weights underflowing)."""
