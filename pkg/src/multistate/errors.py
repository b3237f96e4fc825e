"""Exception hierarchy shared by all modules."""


class MultistateError(Exception):
    """Base class for every error raised by this package."""


# lattice
class NonTrivialIntersection(MultistateError):
    pass


class DegenerateGenerator(MultistateError):
    pass


# model
class SpecInvalid(MultistateError):
    pass


class CriticalValue(MultistateError):
    pass


class WidthTooLarge(MultistateError):
    pass


class BetaTooLarge(MultistateError):
    pass


# discretize
class ShapeMismatch(MultistateError):
    pass


class NotManyBody(MultistateError):
    pass


class PropertyViolated(MultistateError):
    def __init__(self, message, point=None):
        super().__init__(message)
        self.point = point


# spectral
class EigensolverFailure(MultistateError):
    pass


class RecursionDepth(MultistateError):
    pass


class BelowSigma(MultistateError):
    pass


class BoxTooSmall(MultistateError):
    pass


# dynamics
class BoundaryBreach(MultistateError):
    def __init__(self, message, time=None):
        super().__init__(message)
        self.time = time


class ToleranceFailure(MultistateError):
    pass


class EmptyFilter(MultistateError):
    pass


class WindowTooShort(MultistateError):
    pass


class GapNonpositive(MultistateError):
    pass


# cli
class UnknownScenario(MultistateError):
    pass


class OverridePathInvalid(MultistateError):
    pass


class IoFailure(MultistateError):
    pass
