"""Shared exception types."""


class DomainError(ValueError):
    """A closed-form expression was evaluated outside its validity domain."""


class NumericalFailure(RuntimeError):
    """An iterative numerical routine failed to meet its accuracy contract."""
