"""Exception hierarchy.

Every error carries a machine-readable ``to_dict`` so the CLI can emit JSON
on stderr.  Errors split into configuration problems (bad input) and
numerical failures (the computation could not finish).
"""


class GreenBundlesError(Exception):
    kind = "error"

    def __init__(self, message, **details):
        super().__init__(message)
        self.details = details

    def to_dict(self):
        out = {"error": self.kind, "message": str(self)}
        out.update({k: _jsonable(v) for k, v in self.details.items()})
        return out


class ConfigurationError(GreenBundlesError, ValueError):
    kind = "configuration"


class UnknownSystemError(ConfigurationError, KeyError):
    kind = "unknown-system"

    def __str__(self):
        return self.args[0]


class NumericalError(GreenBundlesError, ArithmeticError):
    kind = "numerical"


class ConvexityViolation(NumericalError):
    kind = "convexity-violation"


class NotConvexError(ConvexityViolation):
    kind = "not-convex"


class TransformFailure(NumericalError):
    kind = "transform-failure"


class EscapeError(NumericalError):
    """Integration blew up; ``last_good_time`` is the last accepted time."""

    kind = "escape"

    @property
    def last_good_time(self):
        return self.details.get("last_good_time")


class NotPeriodicError(NumericalError):
    kind = "not-periodic"


class PoleError(NumericalError, ZeroDivisionError):
    kind = "pole"


class InsufficientWindowError(NumericalError):
    kind = "insufficient-window"


class DisconjugacyViolation(NumericalError):
    kind = "disconjugacy-violation"


class ReconstructionDomainError(NumericalError):
    kind = "reconstruction-domain"


class DegenerateFrameError(NumericalError):
    kind = "degenerate-frame"


class SingularProjectionError(NumericalError):
    kind = "singular-projection"


class NoContractionError(NumericalError):
    kind = "no-contraction"


class FitFailure(NumericalError):
    kind = "fit-failure"


class StageFailure(NumericalError):
    """A pipeline stage failed; ``stage`` names it."""

    kind = "stage-failure"


def _jsonable(v):
    try:
        import numpy as np

        if isinstance(v, np.ndarray):
            return v.tolist()
        if isinstance(v, np.generic):
            return v.item()
    except ImportError:  # pragma: no cover
        pass
    return v
