"""Exception hierarchy shared by all modules."""


class KronMLEError(Exception):
    """Base class for every error raised by this package."""


class InvalidInput(KronMLEError, ValueError):
    pass


class NotPositiveDefinite(KronMLEError, ValueError):
    pass


class TooLarge(KronMLEError, ValueError):
    """Raised when an operation would materialize an object beyond its size limit."""


class FormatError(KronMLEError, ValueError):
    """Malformed or inconsistent dataset file."""


class DegenerateInput(KronMLEError, ValueError):
    """Input is well formed but carries no information (e.g. all-zero data)."""


class NumericalFailure(KronMLEError, RuntimeError):
    pass


class SingularMarginal(KronMLEError, ArithmeticError):
    """A one-mode marginal is numerically singular.

    For the flip-flop solver this signals that the maximum likelihood
    estimator may not exist for the given data.
    """
