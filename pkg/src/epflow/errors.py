"""Shared exception types."""


class DomainError(ValueError):
    """An input lies outside the declared domain of an operation.

    The message names the offending coordinate or parameter.
    """


class DivergenceSignal(ArithmeticError):
    """An integral estimate keeps growing under refinement.

    Raised instead of returning a number when successive refinements of a
    quadrature fail to settle.
    """
