"""Exception hierarchy shared by every module."""


class NclpError(Exception):
    """Base class for all errors raised by the package."""


class DomainError(NclpError, ValueError):
    """An argument lies outside the domain of the operation."""


class UnsupportedExponentError(DomainError):
    """The requested exponent makes the problem non-convex or undefined."""


class NumericError(NclpError, ArithmeticError):
    """A numerical routine failed to converge."""


class SizeError(NclpError, ValueError):
    """The requested object would exceed the working size budget."""
