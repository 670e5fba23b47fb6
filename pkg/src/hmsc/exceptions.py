class HmscError(Exception):
    """Base class for all errors raised by this package."""


class FormatError(HmscError, ValueError):
    """Malformed or unsupported file contents."""


class EigenSolverError(HmscError, RuntimeError):
    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class InvariantError(HmscError, AssertionError):
    """An internal bookkeeping invariant was violated."""


class UnsplittableError(HmscError):
    """No admissible bipartition exists for a component."""
