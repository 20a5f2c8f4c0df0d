"""Exception types shared across the package."""


class CurvegasError(Exception):
    """Base class for all errors raised by curvegas."""


class EmptySpecError(CurvegasError):
    """Curve or g spec is missing required fields."""


class NonUnivalentError(CurvegasError):
    """The Laurent data does not define a univalent exterior map."""


class GridTooSmallError(CurvegasError):
    """Requested grid cannot resolve the data (N too small or not a power of two)."""


class OutOfRangeError(CurvegasError):
    """Parameter outside its admissible interval."""


class BranchUnwrapError(CurvegasError):
    """Continuous branch of the log kernel could not be tracked on the grid."""


class KappaGeOneError(CurvegasError):
    """Grunsky operator norm estimate >= 1: not a quasicircle at this truncation."""


class CrossCheckError(CurvegasError):
    """Two independent computations of the same quantity disagree beyond tolerance."""


class TailTooLargeError(CurvegasError):
    """Discarded Fourier energy exceeds the allowed fraction of the total."""


class IllConditionedError(CurvegasError):
    """I + K is too close to singular for a reliable solve."""


class QuadratureDivergenceError(CurvegasError):
    """Diagonal kernel limit could not be evaluated (derivative too small)."""


class SolveFailureError(CurvegasError):
    """Second-kind integral equation system is singular."""


class CollisionError(CurvegasError):
    """Two particle angles coincide to below resolution."""


class NonFiniteEnergyError(CurvegasError):
    """Energy evaluation produced a non-finite value."""


class GridExplosionError(CurvegasError):
    """Tensor quadrature budget exceeded."""


class NodeFailureError(CurvegasError):
    """A thermodynamic-integration node failed to produce a finite estimate."""


class ConfigError(CurvegasError):
    """Configuration file failed schema validation."""
