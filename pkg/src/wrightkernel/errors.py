"""Exception types raised by wrightkernel."""


class WrightKernelError(Exception):
    """Base class for all errors raised by this package."""


class InvalidParameters(WrightKernelError, ValueError):
    """Kernel parameters violate a structural constraint."""


class DomainError(WrightKernelError, ValueError):
    """Argument outside the domain of the requested function."""


class NonConvergent(WrightKernelError):
    """A series did not reach its tolerance within the term cap."""


class QuadratureFailure(WrightKernelError):
    """Adaptive quadrature could not meet the requested tolerance."""


class NearDiagonal(WrightKernelError):
    """Integrable-form kernel evaluated too close to the diagonal."""


class SingularSystem(WrightKernelError):
    """The Nystrom matrix I - K is numerically singular."""


class StepFailure(WrightKernelError):
    """ODE step size underflowed or the step budget was exhausted."""
