"""Exception types raised across the package."""


class MCGError(Exception):
    """Base class for all package errors."""


class InvalidArgumentError(MCGError, ValueError):
    pass


class ExplosiveProcessError(MCGError, OverflowError):
    """Raised when a log-intensity exceeds the overflow guard during simulation."""

    def __init__(self, t, c, i, v):
        self.t, self.c, self.i, self.v = t, c, i, v
        super().__init__(
            f"explosive process: log-intensity {v:.6g} > 700 at t={t}, color={c}, tile={i}"
        )


class ConvergenceError(MCGError, RuntimeError):
    """Fisher scoring did not converge; ``partial`` holds the last iterate."""

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial


class RankDeficiencyError(MCGError, ValueError):
    def __init__(self, color, columns):
        self.color = color
        self.columns = list(columns)
        super().__init__(
            f"rank-deficient design for color {color}: collinear columns {self.columns}"
        )


class SingularInformationError(MCGError, ValueError):
    pass


class ParseError(MCGError, ValueError):
    def __init__(self, message, line=None, path=None):
        self.line = line
        self.path = path
        where = ""
        if path is not None:
            where += f"{path}"
        if line is not None:
            where += f":{line}"
        super().__init__(f"{where}: {message}" if where else message)
