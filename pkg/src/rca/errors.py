"""Exception hierarchy.

Everything raised on purpose by the package derives from :class:`RCAError`.
The CLI maps :class:`ConfigError` to exit code 2 and :class:`NumericError`
to exit code 3.
"""


class RCAError(Exception):
    """Base class for all package errors."""


class ConfigError(RCAError, ValueError):
    """Invalid configuration, arguments or input files."""


class InvalidInputError(ConfigError):
    """An argument violates an operation's precondition."""


class InvalidOrderError(InvalidInputError):
    """Tensor or cumulant order outside the supported range."""


class ShapeError(InvalidInputError):
    """Dimension mismatch between operands."""


class AlignmentError(InvalidInputError):
    """Paired sample matrices do not share the same number of rows."""


class NumericError(RCAError, ArithmeticError):
    """A numerical procedure failed or met a degenerate input."""


class DegenerateComponentError(NumericError):
    """A latent component's cumulant unfolding is (numerically) rank deficient."""


class DegenerateMapError(NumericError):
    """A linear map is not of full column rank."""


class RankError(NumericError):
    """A moment or covariance matrix is singular."""


class ConvergenceError(NumericError):
    """An iterative solver did not converge.

    Attributes
    ----------
    best_residual : float
        Smallest residual reached across all attempts.
    best_result : object or None
        The best (unconverged) fit, for callers that accept it anyway.
    """

    def __init__(self, message, best_residual=float("nan"), best_result=None):
        super().__init__(message)
        self.best_residual = best_residual
        self.best_result = best_result


class DivergenceError(NumericError):
    """An iteration produced non-finite values."""

    def __init__(self, message, iteration=-1):
        super().__init__(message)
        self.iteration = iteration
