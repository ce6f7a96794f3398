"""Exception hierarchy shared by every module of the package."""


class TransportError(Exception):
    """Base class for all errors raised by lctransport."""


class InvalidDeclaration(TransportError):
    """A declared curvature bound, minimiser or sup-norm is contradicted by sampling."""


class NonIntegrable(TransportError):
    """The density cannot be certified integrable (no growth at infinity)."""


class QuadratureFailure(TransportError):
    """Adaptive refinement exhausted its panel budget."""


class NonFiniteDensity(TransportError):
    """A density evaluation produced NaN or +inf."""


class RootBracketFailure(TransportError):
    """A quantile lies outside what the target CDF can bracket."""


class OutOfDomain(TransportError):
    """Evaluation point outside the interior of the source support."""


class SupportMismatch(TransportError):
    """Target support is not contained in the source support."""


class InvalidDimension(TransportError):
    pass


class DegenerateConstruction(TransportError):
    """The piecewise auxiliary function has an empty third interval (P <= Q)."""


class DivergentIteration(TransportError):
    pass


class BoundOverflow(TransportError):
    """An explicit constant exceeds the floating point range."""


class PreconditionViolated(TransportError):
    pass


class ConfigError(TransportError):
    """Malformed experiment configuration or unknown catalog name."""
