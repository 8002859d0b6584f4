"""Exception hierarchy shared across the package."""


class DetflowError(Exception):
    """Base class for all detflow-specific errors."""


class RankDeficient(DetflowError):
    """A matrix required to have full column rank does not."""


class ZeroMatrix(DetflowError):
    """All entries of a matrix are numerically zero."""


class NotPositiveDefinite(DetflowError):
    """A triangular factorization met a nonpositive pivot."""


class RankDeficientProjection(DetflowError):
    """The projected data matrix A X has rank below p."""


class ZeroProjection(DetflowError):
    """The projected energy tr(X'A'AX) vanished."""


class LineSearchFailed(DetflowError):
    """No step satisfying the Wolfe conditions within the trial budget."""


class SingularSystem(DetflowError):
    """The extrapolation weights are not determined by the residual system."""


class EmptySpectrum(DetflowError):
    """No positive singular values to enumerate."""


class ProfileSumMismatch(DetflowError):
    """Multiplicity profile does not sum to the number of loading columns."""


class InconsistentStationarityTests(DetflowError):
    """Geometric and gradient stationarity tests disagree beyond slack."""


class NotASaddle(DetflowError):
    """Curvature probe requested at a point that is not a saddle."""


class InvalidModelParams(DetflowError):
    """Spectrum model parameters are out of range."""


class ConfigError(DetflowError):
    """Malformed run configuration; the message names the offending key."""
