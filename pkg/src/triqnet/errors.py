class TriqnetError(Exception):
    """Base class for simulator errors."""


class UsageError(TriqnetError, ValueError):
    """Invalid arguments: bad indices, mismatched dimensions, unknown labels."""


class NumericalError(TriqnetError, ArithmeticError):
    """A numerical routine failed its own accuracy check."""
