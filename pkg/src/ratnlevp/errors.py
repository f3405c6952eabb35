"""Exception hierarchy shared by all modules."""


class RatNlevpError(Exception):
    """Base class for every error raised by this package."""


class SingularMatrix(RatNlevpError):
    pass


class ConvergenceFailure(RatNlevpError):
    pass


class DimensionMismatch(RatNlevpError):
    pass


class DimensionCap(RatNlevpError):
    pass


class InvalidNodeCount(RatNlevpError):
    pass


class InvalidContour(RatNlevpError):
    pass


class EvaluationFailure(RatNlevpError):
    """A scalar function returned a non-finite value."""

    def __init__(self, message, term=None, z=None):
        super().__init__(message)
        self.term = term
        self.z = z


class RegionNotInterior(RatNlevpError):
    pass


class AtPole(RatNlevpError):
    pass


class NotIdentityM(RatNlevpError):
    pass


class NotEigenpair(RatNlevpError):
    pass


class BoundViolated(RatNlevpError):
    def __init__(self, message, pair=None):
        super().__init__(message)
        self.pair = pair


class DegenerateBasis(RatNlevpError):
    pass


class SingularAtNode(RatNlevpError):
    pass


class RankDeficientProbe(RatNlevpError):
    pass


class ParseError(RatNlevpError):
    pass


class UnknownFunctionDescriptor(RatNlevpError):
    pass


class IncompatibleRuns(RatNlevpError):
    pass


class ConfigError(RatNlevpError):
    """Invalid configuration; ``field`` is a dotted path into the config."""

    def __init__(self, message, field=None):
        if field:
            message = f"{field}: {message}"
        super().__init__(message)
        self.field = field
