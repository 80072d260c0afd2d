"""Semantic exception hierarchy; CLI exit codes hang off these classes."""


class KpzlabError(Exception):
    """Base class for all errors raised by this package."""

    exit_code = 1


class InvalidInputError(KpzlabError, ValueError):
    """Inputs violate a contract (chamber order, parameter domain, config)."""

    exit_code = 3


class DomainError(InvalidInputError):
    """Argument outside the mathematical domain of an operation."""


class PoleError(KpzlabError, ZeroDivisionError):
    """Evaluation requested at (or numerically on top of) a pole."""

    exit_code = 4


class AccuracyError(KpzlabError, ArithmeticError):
    """Quadrature or determinant refinement failed to meet its tolerance."""

    exit_code = 4


class CapacityError(KpzlabError):
    """Request exceeds a hard size cap (e.g. tensor-quadrature dimension)."""

    exit_code = 5


class SimulationDivergedError(KpzlabError, FloatingPointError):
    """A stochastic scheme produced a non-finite or non-terminating state."""

    exit_code = 4


class StepSizeError(KpzlabError):
    """Time step too large for the scheme (stiffness guard violated)."""

    exit_code = 3


class ContourConstructionError(KpzlabError):
    """A contour could not be built within its separation guarantees."""

    exit_code = 4


class DegenerateScaleError(KpzlabError):
    """A non-universal scale constant vanishes; no cube-root scale exists."""

    exit_code = 4


class CheckFailedError(KpzlabError):
    """An in-config acceptance check did not meet its tolerance."""

    exit_code = 2
