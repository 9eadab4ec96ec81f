"""Exception types raised across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain of the operation."""


class ModelValidationError(ValueError):
    """A target model violates the positivity / boundedness requirements."""


class DegenerateStratumError(ModelValidationError):
    """A stratum carries (numerically) zero mass under the target."""


class UnsupportedOperation(NotImplementedError):
    """The operation is not available for this kind of state space."""


class NumericError(ArithmeticError):
    """A linear solve or quadrature failed to reach its tolerance."""


class CLTInapplicableError(ValueError):
    """The step-size schedule does not satisfy the CLT conditions."""


class ObserverError(RuntimeError):
    """An observer callback raised while the chain was iterating."""
