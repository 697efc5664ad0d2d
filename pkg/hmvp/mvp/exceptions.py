class HmvpError(Exception):
    """
    Base class of every error raised by the mvp library.
    """


class InvalidArgumentError(HmvpError, ValueError):
    """
    Raised when an argument breaks the documented preconditions
    (mismatched group index, non-positive radius, p <= 1, ...).
    """


class InvalidGridError(InvalidArgumentError):
    """
    Raised when a space-time grid can not support the mean value update:
    a collar narrower than eps, a slab length not dividing eps^2, or a
    stencil reaching outside the lattice.
    """


class DomainError(HmvpError, ValueError):
    """
    Raised when a field is evaluated outside of its domain or returns
    a non-finite value.
    """


class DegenerateGradientError(HmvpError, ArithmeticError):
    """
    Raised when the horizontal gradient vanishes where the normalized
    infinity sub-Laplacian is needed. The caller chooses the fallback.
    """

    def __init__(self, message, grad_norm=0.0):
        super(__class__, self).__init__(message)
        self.grad_norm = grad_norm


class ConvergenceError(HmvpError, RuntimeError):
    """
    Raised when the inner fixed-point iteration of a time slab does not
    reach the requested tolerance.

    :param diagnostics: slab index, sweep count and change history
    :type diagnostics: dict
    """

    def __init__(self, message, diagnostics=None):
        super(__class__, self).__init__(message)
        self.diagnostics = diagnostics or {}
