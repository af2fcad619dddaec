"""Exception hierarchy shared by every ringcap module."""


class RingcapError(Exception):
    """Base class for all errors raised by ringcap."""


class DomainError(RingcapError, ValueError):
    """An input lies outside the mathematical domain of an operation."""


class ResolutionError(RingcapError, ValueError):
    """Too few samples for the requested quadrature or derivative order."""


class DegenerateInputError(DomainError):
    """Point sets without area (e.g. all collinear)."""


class PreconditionError(RingcapError, ValueError):
    """A caller-side precondition does not hold."""


class ConvergenceError(RingcapError, RuntimeError):
    """A nonlinear iteration stopped before reaching its tolerance."""

    def __init__(self, message, residual=float("nan")):
        super().__init__(message)
        self.residual = residual


class TopologyError(RingcapError, RuntimeError):
    """A level set did not come out as one closed loop."""


class MonotonicityError(RingcapError, RuntimeError):
    """A sequence expected to be monotone is not, beyond tolerance."""
