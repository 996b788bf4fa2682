"""Exception hierarchy.

Validation problems derive from :class:`ValidationError` (CLI exit code 2);
numerical breakdowns such as caustics, window or truncation failures derive
from :class:`NumericalError` (CLI exit code 3).
"""


class CoherentKernelError(Exception):
    """Base class for all package errors."""


class ValidationError(CoherentKernelError, ValueError):
    """An input violates a documented precondition."""


class NonPositiveTime(ValidationError):
    pass


class NumericalError(CoherentKernelError):
    """A computation cannot be carried out reliably with the given inputs."""


class CausticTime(NumericalError):
    """The requested time lies on (or too close to) a kernel caustic."""


class DegenerateKernel(NumericalError):
    pass


class OutsideWindow(NumericalError):
    """Requested time is not covered by a precomputed kernel state."""


class WindowTooSmall(NumericalError):
    """Wavepacket amplitude does not decay before the grid boundary."""


class PhaseResolution(NumericalError):
    """Kernel phase changes by more than the allowed amount per grid step."""


class ResolutionError(NumericalError):
    """Time step or quadrature step too coarse for the dynamics."""


class TruncationError(NumericalError):
    """Fock-space truncation is too small for the state being represented."""


class ZeroCrossing(NumericalError):
    """The auxiliary function F(t) changes sign inside the window."""


class MathieuEvaluationFailure(NumericalError):
    pass
