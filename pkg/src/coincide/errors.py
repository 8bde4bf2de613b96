"""Exception and warning types raised across the package."""


class CoincideError(Exception):
    """Base class for validation errors (CLI exit code 2)."""


class ConvexityError(CoincideError):
    """A constructed body failed the strict convexity margin check."""

    def __init__(self, message, margin=None, admissible_eps=None):
        super().__init__(message)
        self.margin = margin
        self.admissible_eps = admissible_eps


class ConvergenceFailure(Exception):
    """No multistart run reached the requested tolerance (CLI exit code 3)."""

    def __init__(self, message, best_residual=None):
        super().__init__(message)
        self.best_residual = best_residual


class AmbiguityWarning(UserWarning):
    """Two non-equivalent normals solved the same diameter problem."""


class InvalidK(CoincideError):
    pass


class NotInteriorError(CoincideError):
    pass


class NoIntersection(CoincideError):
    pass


class TangencyDegenerate(CoincideError):
    pass


class DegenerateSection(CoincideError):
    pass
