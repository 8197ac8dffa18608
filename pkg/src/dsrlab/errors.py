"""Exception hierarchy shared by every dsrlab module."""


class DSRError(Exception):
    """Base class for all dsrlab errors."""


class ParameterError(DSRError, ValueError):
    """Invalid physical or numerical parameter."""


class OverflowCapError(DSRError, OverflowError):
    """|E/k| exceeded the hyperbolic-function overflow cap."""

    def __init__(self, ratio, cap):
        super().__init__(f"|E/k| = {ratio:.6g} exceeds overflow cap {cap:g}")
        self.ratio = ratio
        self.cap = cap


class NoConvergenceError(DSRError):
    """Root iteration hit its iteration limit; ``bracket`` holds the last interval."""

    def __init__(self, message, bracket):
        super().__init__(f"{message}; last bracket {bracket}")
        self.bracket = bracket


class BranchNotFoundError(DSRError):
    """No sign change could be established for the requested root branch."""


class DegenerateBranchError(DSRError):
    """The two branch energies of a mode coincide, so the branch split is singular."""


class FlowAbortedError(DSRError):
    """A boost-flow integration stopped early. ``trajectory`` is the partial result."""

    def __init__(self, message, trajectory):
        super().__init__(message)
        self.trajectory = trajectory


class ConfigError(ParameterError):
    """Malformed or invalid run configuration."""


class OutputError(DSRError, OSError):
    """A report or series could not be written; the message names the path."""
