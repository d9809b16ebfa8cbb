"""Exception hierarchy. The CLI maps these onto exit codes."""


class GmiError(Exception):
    """Base class for all library errors."""


class DomainError(GmiError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class NumericalError(GmiError, ArithmeticError):
    """A numerical procedure failed (singular matrix, non-finite value, ...)."""


class SingularMatrixError(NumericalError):
    pass


class ConvergenceError(NumericalError):
    """An iterative method hit its iteration cap.

    ``best`` carries the best point found so far when one exists.
    """

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


class EvaluationError(NumericalError):
    """A user-supplied function returned a non-finite value."""


class DegenerateDistortionError(NumericalError):
    """The distorted output has zero power, so the GMI is undefined."""


class DegenerateCellError(DomainError):
    """A quantizer cell has zero width in the t-domain."""


class ResourceCapError(GmiError):
    """A simulation request exceeds the desk-scale resource caps."""
