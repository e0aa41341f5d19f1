"""Exception types raised across the package."""


class PupilArcError(Exception):
    """Base class for all package errors."""


class InvalidArgument(PupilArcError, ValueError):
    pass


class ParseError(PupilArcError, ValueError):
    pass


class FitError(PupilArcError):
    """Raised when no ellipse can be fitted to a point set."""


class RoiError(PupilArcError):
    """Raised when no Haar aperture fits inside the image."""


class SpecError(PupilArcError, ValueError):
    """Raised for an inconsistent synthetic scene description."""
