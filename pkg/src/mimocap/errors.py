"""Exception hierarchy shared by all solver modules."""


class MimoCapError(Exception):
    """Base class for all library errors."""


class InputError(MimoCapError):
    """Malformed input: wrong shapes, inconsistent sizes, bad flags."""


class DomainError(MimoCapError):
    """Input is well-formed but outside the operation's domain
    (e.g. non-Hermitian matrix, rank-deficient channel for a
    full-rank-only routine)."""


class ConvergenceError(MimoCapError):
    """An iterative routine exhausted its budget.

    Carries the last/best iterate so callers can inspect or salvage it.
    """

    def __init__(self, message, last_iterate=None, trace=None):
        super().__init__(message)
        self.last_iterate = last_iterate
        self.trace = trace


class StepError(MimoCapError):
    """Line search failed to find an acceptable step."""


class RoutingError(MimoCapError):
    """A forced solver mode was requested whose preconditions fail."""
