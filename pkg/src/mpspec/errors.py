"""Exception hierarchy shared by all modules."""


class MpspecError(Exception):
    """Base class for errors raised by this package."""


class DimensionError(MpspecError, ValueError):
    """Shapes of pencils, tuples or vectors do not fit together."""


class NotSimpleError(MpspecError):
    """A numerical certificate for a simple eigenvalue could not be produced.

    Raised instead of returning a condition number that the theory does not
    back up (left null space of the wrong dimension, singular auxiliary
    matrix, singular projected pencil, ...).
    """


class ConvergenceError(MpspecError):
    """An iterative method did not reach its tolerance."""

    def __init__(self, msg, iterations=None, residual=None):
        super().__init__(msg)
        self.iterations = iterations
        self.residual = residual
