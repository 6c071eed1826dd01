"""Shared exception types."""


class ValidationError(ValueError):
    """An input violates a structural precondition or a declared invariant."""


class UndefinedQuantityError(ArithmeticError):
    """A requested quantity is undefined on the given input.

    Typical case: a tail expectation conditioned on an event of probability
    zero.
    """
