"""Shared exception types."""


class InvalidInputError(ValueError):
    """Raised when arguments violate a documented precondition."""


class NumericalFailureError(RuntimeError):
    """Raised when an iterative numerical procedure fails to converge.

    Carries the tolerance that was actually achieved so callers can decide
    whether to retry with different settings.
    """

    def __init__(self, message, achieved=None):
        super().__init__(message)
        self.achieved = achieved
