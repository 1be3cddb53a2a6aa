"""Exception hierarchy shared by the package."""


class FbmCltError(Exception):
    """Base class for all package errors."""


class RegimeError(FbmCltError, ValueError):
    """Raised when (H, d) fall outside the regime an operation needs."""


class QuadratureError(FbmCltError, RuntimeError):
    """Raised when a quadrature refinement loop fails to converge.

    The ``history`` attribute carries the successive mesh values so that the
    caller can inspect how far the iteration got.
    """

    def __init__(self, message, history=()):
        super().__init__(message)
        self.history = list(history)


class EmbeddingError(FbmCltError, RuntimeError):
    """Circulant embedding produced negative eigenvalues after all doublings."""


class ResolutionError(FbmCltError, ValueError):
    """Grid step too coarse for the requested scaling parameter."""

    def __init__(self, message, required_step=None):
        super().__init__(message)
        self.required_step = required_step


class MembershipError(FbmCltError, ValueError):
    """A test function fails one of the defining conditions of its class."""


class UnsupportedTransformError(FbmCltError, NotImplementedError):
    """No Fourier transform is available for this kind of test function."""
