"""Exception types raised by smoothsdp."""


class SmoothSDPError(Exception):
    """Base class for all package errors."""


class DimensionMismatchError(SmoothSDPError, ValueError):
    pass


class DegenerateRetractionError(SmoothSDPError, ValueError):
    """Raised when the metric projection onto the manifold is not unique.

    ``index`` is the offending row (product of spheres) or block (product
    of Stiefel); ``None`` for the sphere.
    """

    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class InfeasiblePointError(SmoothSDPError, ValueError):
    def __init__(self, message, index=None, residual=None):
        super().__init__(message)
        self.index = index
        self.residual = residual


class ConstraintQualificationError(SmoothSDPError, ValueError):
    """The matrices A_i Y are (numerically) linearly dependent."""

    def __init__(self, message, sigma_min=None):
        super().__init__(message)
        self.sigma_min = sigma_min


class LanczosConvergenceError(SmoothSDPError, RuntimeError):
    """Lanczos hit its iteration cap; the best estimate is attached."""

    def __init__(self, message, eigenvalue=None, eigenvector=None, residual=None):
        super().__init__(message)
        self.eigenvalue = eigenvalue
        self.eigenvector = eigenvector
        self.residual = residual


class InvalidBracketError(SmoothSDPError, ValueError):
    pass


class NoEscapeError(SmoothSDPError, ValueError):
    """S(Y) has no negative eigenvalue, so there is no saddle to escape."""


class SolverError(SmoothSDPError, RuntimeError):
    pass


class GsetParseError(SmoothSDPError, ValueError):
    def __init__(self, message, line=None):
        if line is not None:
            message = f"{message}, line {line}"
        super().__init__(message)
        self.line = line


class ProblemFileError(SmoothSDPError, ValueError):
    def __init__(self, message, line=None):
        if line is not None:
            message = f"{message}, line {line}"
        super().__init__(message)
        self.line = line
