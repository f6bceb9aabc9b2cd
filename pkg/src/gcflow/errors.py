"""Exception hierarchy shared by every gcflow module."""


class GcflowError(Exception):
    """Base class for all library errors."""


class DegenerateMetric(GcflowError, ValueError):
    """The metric determinant (or g11) is not safely positive."""


class StencilOutOfDomain(GcflowError, ValueError):
    """A finite-difference stencil would reach outside the sampled grid."""


class UnknownTag(GcflowError, KeyError):
    """Requested builtin metric does not exist."""


class ExpressionError(GcflowError, ValueError):
    """Malformed expression string."""


class NumericalFailure(GcflowError):
    """Base for failures of the numerical march (CLI exit code 2)."""


class NoNegativeRoot(NumericalFailure, ValueError):
    """(L, M, N) has no admissible negative pressure root."""


class ConstraintViolation(NumericalFailure, ValueError):
    """The Gauss constraint LN - M^2 = kappa is violated beyond tolerance."""


class SonicDegeneracy(NumericalFailure, ValueError):
    """A state left the Bernoulli domain q^2 + kappa > 0 (or became characteristic)."""


class CflViolation(NumericalFailure, ValueError):
    """The marching step exceeds the combined parabolic/hyperbolic CFL bound."""


class BeyondCavitation(GcflowError, ValueError):
    """Flow speed beyond the cavitation speed."""


class FrameDrift(NumericalFailure):
    """Frame invariants drifted past the re-projection threshold."""


class DegenerateConfiguration(GcflowError, ValueError):
    """Point clouds whose cross-covariance is rank deficient."""


class ConfigError(GcflowError, ValueError):
    """Aggregated configuration validation errors."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))
