"""Exception hierarchy shared by all modules."""


class SnrLossError(Exception):
    """Base class for every error raised by the package."""


class NotPSD(SnrLossError, ValueError):
    pass


class NotPD(SnrLossError, ValueError):
    pass


class SingularPivot(SnrLossError, ValueError):
    pass


class ZeroVector(SnrLossError, ValueError):
    pass


class RankDeficient(SnrLossError, ValueError):
    pass


class NoConvergence(SnrLossError, ArithmeticError):
    pass


class InsufficientDoF(SnrLossError, ValueError):
    pass


class BadParam(SnrLossError, ValueError):
    pass


class SingularBlock(SnrLossError, ValueError):
    pass


class Singular(SnrLossError, ValueError):
    pass


class BadAngle(SnrLossError, ValueError):
    pass


class DegenerateQ(SnrLossError, ValueError):
    pass


class DegenerateProjection(SnrLossError, ValueError):
    pass


class NoClosedForm(SnrLossError, NotImplementedError):
    pass


class EmptySamples(SnrLossError, ValueError):
    pass


class UnknownFigure(SnrLossError, KeyError):
    pass


class ConfigError(SnrLossError, ValueError):
    """Invalid experiment configuration; ``field`` names the offending key."""

    def __init__(self, message, field=None):
        super().__init__(message if field is None else f"{field}: {message}")
        self.field = field


class TrialError(SnrLossError, RuntimeError):
    """A Monte-Carlo trial failed; carries the index of the failing trial."""

    def __init__(self, trial, cause):
        super().__init__(f"trial {trial} failed: {cause}")
        self.trial = trial
        self.cause = cause
