"""Exception hierarchy.

Every error raised by the library derives from :class:`MaslovError` so that
the CLI can map families of failures onto exit codes.
"""


class MaslovError(Exception):
    """Base class for all library errors."""


class InputError(MaslovError, ValueError):
    """Malformed or out-of-contract input (CLI exit code 2)."""


class NumericalError(MaslovError, ArithmeticError):
    """A computation could not be carried out reliably (CLI exit code 3)."""


class DimensionMismatch(InputError):
    pass


class UnsupportedKind(InputError):
    pass


class UnsupportedInput(InputError):
    pass


class MissingAnalyticH(InputError):
    pass


class BoundaryOffConstraint(InputError):
    pass


class NotUnitary(InputError):
    pass


class ParseError(InputError):
    pass


class ValidationError(InputError):
    pass


class DegenerateFrame(NumericalError):
    pass


class NeedRefinement(NumericalError):
    """Consecutive phase samples jump by pi/2 or more."""


class ZeroSample(NumericalError):
    pass


class ProjectionDegenerate(NumericalError):
    pass


class NonFiniteField(NumericalError):
    pass


class StepUnderflow(NumericalError):
    pass


class SingularMetric(NumericalError):
    pass


class RouteDisagreement(NumericalError):
    pass
