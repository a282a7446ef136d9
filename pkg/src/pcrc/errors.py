"""Exception hierarchy shared by the library and the CLI."""


class PCError(Exception):
    """Base class for every error raised by pcrc."""


class ValidationError(PCError, ValueError):
    """Input violates a documented precondition (bad shape, sign, flag...)."""


class ComputationError(PCError, ArithmeticError):
    """A well-formed input produced a numerically unusable result."""
