"""Exception types shared across the package."""


class TTSALabError(Exception):
    """Base class for all package-specific errors."""


class DimensionMismatch(TTSALabError, ValueError):
    """Operands have incompatible shapes."""


class NotHurwitz(TTSALabError, ValueError):
    """A matrix required to be (negated-)Hurwitz is not."""


class NonConvergence(TTSALabError, RuntimeError):
    """A numerical routine failed to reach its tolerance."""


class IndexOutOfRange(TTSALabError, IndexError):
    """Requested iteration index is outside the stored or valid range."""


class NoLimit(TTSALabError, ValueError):
    """A tabulated sequence has no stable tail limit."""


class Unsupported(TTSALabError, ValueError):
    """Operation is not defined for this schedule or problem kind."""


class SingularInnerJacobian(TTSALabError, ValueError):
    """The fast-operator Jacobian is numerically singular."""


class SingularB1(TTSALabError, ValueError):
    """The fast drift matrix is numerically singular."""


class IdentityViolation(TTSALabError, AssertionError):
    """An exact algebraic identity was violated beyond tolerance."""


class CholeskyFailure(TTSALabError, ValueError):
    """A covariance factorization failed even with jitter."""


class Diverged(TTSALabError, RuntimeError):
    """An iterate exceeded the divergence threshold."""


class TooManyDivergences(TTSALabError, RuntimeError):
    """More than the allowed fraction of replicas diverged."""


class InsufficientValues(TTSALabError, ValueError):
    """Too few anchor values to build a trajectory."""


class OutOfHorizon(TTSALabError, ValueError):
    """Evaluation time lies beyond the trajectory's covered horizon."""


class InsufficientSamples(TTSALabError, ValueError):
    """Too few samples for the requested estimator or test."""


class NonPositiveInput(TTSALabError, ValueError):
    """Inputs that must be strictly positive are not."""


class ConfigError(TTSALabError, ValueError):
    """Experiment configuration is malformed or inconsistent."""
