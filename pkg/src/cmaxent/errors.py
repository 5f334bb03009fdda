"""Exception hierarchy shared by the solvers and the CLI."""


class CmaxentError(Exception):
    """Base class for all package errors."""


class DataError(CmaxentError, ValueError):
    """Malformed or degenerate input data (empty sample, bad CSV, ...)."""


class SolverError(CmaxentError):
    """A solver could not produce a valid model."""


class InfeasibleError(SolverError, ValueError):
    """Moment constraints admit no distribution of the required form."""


class ConvergenceError(SolverError, RuntimeError):
    """An iterative solver hit its iteration cap."""


class QuadratureError(SolverError, RuntimeError):
    """Gauss-Hermite rule could not reach the requested accuracy."""
