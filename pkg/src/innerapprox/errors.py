"""Exception hierarchy shared by the package."""


class InnerApproxError(Exception):
    """Base class for all package errors."""


class DomainError(InnerApproxError, ValueError):
    """An argument lies outside the domain of the operation."""


class DimensionMismatch(InnerApproxError, ValueError):
    """Matrix-valued operands of different sizes were combined."""


class ResolutionError(InnerApproxError):
    """A sampling grid is too coarse for the requested guarantee."""


class NotFoundError(InnerApproxError, KeyError):
    """A requested value does not occur in a step function."""


class BudgetExhausted(InnerApproxError):
    """Synthesis could not certify a solution within its degree/iteration budget.

    The best approximant found so far is attached for diagnostics.
    """

    def __init__(self, message, best=None, certificate=None, channel=None):
        super().__init__(message)
        self.best = best
        self.certificate = certificate
        self.channel = channel
