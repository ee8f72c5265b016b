"""Exception types raised across the package."""


class RateboundError(Exception):
    """Base class for all package errors."""


class InvalidDistribution(RateboundError, ValueError):
    pass


class InvalidBeta(RateboundError, ValueError):
    pass


class SupportViolation(RateboundError, ValueError):
    """Some outcome has mass under p but none under the reference q."""


class DegeneratePrior(RateboundError, ValueError):
    pass


class InvalidTask(RateboundError, ValueError):
    pass


class SchemaError(InvalidTask):
    """A task document parsed but violates the task schema.

    ``field`` names the offending entry, e.g. ``"utility[1]"``.
    """

    def __init__(self, message, field=None):
        super().__init__(message)
        self.field = field


class ParseError(RateboundError, ValueError):
    pass


class InvalidTaskId(RateboundError, ValueError):
    pass


class GridTooLarge(RateboundError, ValueError):
    pass


class EmptyInput(RateboundError, ValueError):
    pass


class TooFewPoints(RateboundError, ValueError):
    pass


class UnknownObservation(RateboundError, KeyError):
    def __str__(self):
        return str(self.args[0]) if self.args else ""


class NotConverged(RateboundError, RuntimeError):
    """The iteration budget ran out; the partial result is attached."""

    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result


class NonTerminating(RateboundError, RuntimeError):
    pass
