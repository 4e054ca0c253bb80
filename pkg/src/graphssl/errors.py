"""Exception types raised across the package."""


class GraphSSLError(Exception):
    """Base class for all package errors."""


class InputError(GraphSSLError, ValueError):
    """Malformed data: wrong shapes, non-finite values, negative affinities."""


class ConfigError(GraphSSLError, ValueError):
    """Invalid or inconsistent parameters."""


class FormatError(InputError):
    """A binary file does not follow the expected layout."""


class SolverError(GraphSSLError, RuntimeError):
    """An iterative solver failed to converge."""

    def __init__(self, message, residual=None, iterations=None):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class InvariantError(GraphSSLError, AssertionError):
    """An internal consistency check failed."""
