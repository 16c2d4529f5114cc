"""Exception hierarchy shared by every module of the package."""


class ManifoldLQGError(Exception):
    pass


class NotStable(ManifoldLQGError):
    """A matrix that must be Schur stable has spectral radius too close to (or above) 1."""


class SingularSolve(ManifoldLQGError):
    pass


class NonSquare(ManifoldLQGError, ValueError):
    pass


class NotSymmetric(ManifoldLQGError, ValueError):
    pass


class NotStabilizable(ManifoldLQGError):
    pass


class NoConvergence(ManifoldLQGError):
    def __init__(self, message, report=None, t=None):
        super().__init__(message)
        self.report = report
        self.t = t


class DimensionMismatch(ManifoldLQGError, ValueError):
    pass


class SingularMetric(ManifoldLQGError):
    pass


class SingularConstraint(ManifoldLQGError, ValueError):
    pass


class InfeasibleInit(ManifoldLQGError, ValueError):
    pass


class DegenerateDraw(ManifoldLQGError):
    pass


class LengthMismatch(ManifoldLQGError, ValueError):
    pass


class DefectiveClosedLoop(ManifoldLQGError):
    pass


class SchemaMismatch(ManifoldLQGError, ValueError):
    pass


class ConfigError(ManifoldLQGError, ValueError):
    def __init__(self, message, key=None):
        super().__init__(message)
        self.key = key


class NumericalFailure(ManifoldLQGError):
    """Raised by the experiment driver; carries the round and algorithm that failed."""

    def __init__(self, message, t=None, algorithm=None):
        super().__init__(message)
        self.t = t
        self.algorithm = algorithm
