"""Exception types raised across the package."""


class XfidError(Exception):
    """Base class for all package errors."""


class GenerationFailed(XfidError):
    """No valid model could be generated within the retry budget."""


class NonFiniteContribution(XfidError):
    """A ground-truth contribution evaluated to NaN or infinity."""


class SingularSystem(XfidError):
    """Normal equations could not be factorized, even with jitter."""


class DegeneratePD(XfidError):
    """Too many non-finite evaluations at a partial dependence grid point."""


class TooFewValidSamples(XfidError):
    """Too few perturbations produced a finite model output."""


class NonFiniteValueFunction(XfidError):
    """A coalition value could not be estimated from finite evaluations."""


class DegenerateIQR(XfidError):
    """The interquartile range of the reference vector is zero."""


class ZeroVariance(XfidError):
    """A rank vector is constant, so the correlation is undefined."""


class ConfigInvalid(XfidError):
    """A configuration or model document is malformed."""


class TaskTimeout(XfidError):
    """A task exceeded its wall-clock budget."""
