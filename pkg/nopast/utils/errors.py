class NopastError(Exception):
    pass


class ContractViolation(NopastError, ValueError):
    """A caller broke an operation's precondition (shapes, bounds, ranges)."""


class GpNumericalError(NopastError, ArithmeticError):
    """The kernel matrix could not be factorized even after jitter escalation."""


class GpFitError(GpNumericalError):
    pass


class ObjectiveError(NopastError):
    """Objective evaluation failed; `record` holds everything evaluated so far."""

    def __init__(self, message: str, record=None) -> None:
        super().__init__(message)
        self.record = record


class UnknownMinimumError(NopastError):
    pass
