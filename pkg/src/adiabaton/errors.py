"""Exception and warning types raised across the package."""


class AdiabatonError(Exception):
    """Base class for all package errors."""

    #: short machine-readable tag used in CLI error records
    kind = "AdiabatonError"

    def __init_subclass__(cls, **kwargs):
        super().__init_subclass__(**kwargs)
        cls.kind = cls.__name__


class NonPositiveParameter(AdiabatonError, ValueError):
    pass


class DuplicateCoupling(AdiabatonError, ValueError):
    pass


class IncompleteScheme(AdiabatonError, ValueError):
    pass


class SchemeMismatch(AdiabatonError, ValueError):
    pass


class ZeroTotalField(AdiabatonError, ValueError):
    pass


class ControlVanishes(AdiabatonError, ValueError):
    pass


class DegenerateDarkState(AdiabatonError, ValueError):
    pass


class DegenerateModes(AdiabatonError, ValueError):
    pass


class NoRealRoot(AdiabatonError, ValueError):
    pass


class WindowClipped(AdiabatonError, ValueError):
    pass


class GridMismatch(AdiabatonError, ValueError):
    pass


class ConfigInvalid(AdiabatonError, ValueError):
    pass


class NonFiniteDetected(AdiabatonError, FloatingPointError):
    """The integrator produced NaN/inf; ``z`` and ``tau`` locate the first hit."""

    def __init__(self, message, z=None, tau=None):
        super().__init__(message)
        self.z = z
        self.tau = tau


class GridTooCoarse(UserWarning):
    """Step size or adiabaticity heuristics suggest the run is under-resolved."""
