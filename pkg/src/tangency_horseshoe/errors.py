"""Exception hierarchy shared by all modules."""


class HorseshoeError(Exception):
    """Base class for every error raised by this package."""


class InvalidParams(HorseshoeError, ValueError):
    """One or more parameter invariants are violated.

    ``errors`` lists every violated invariant by name; no partial acceptance.
    """

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


class NotInDomain(HorseshoeError):
    """The point lies in the escape band or outside the unit square."""


class NoPreimage(HorseshoeError):
    pass


class AmbiguousPreimage(HorseshoeError):
    """More than one region image contains the point."""

    def __init__(self, point, regions):
        self.point = point
        self.regions = tuple(regions)
        names = ", ".join(r.value for r in self.regions)
        super().__init__(f"{tuple(point)} has preimages in {names}")


class TangencyPoint(HorseshoeError):
    pass


class TangencyOrbit(HorseshoeError):
    pass


class HorizontalCapture(HorseshoeError):
    """A transported cone would contain the horizontal direction."""


class NoReturn(HorseshoeError):
    pass


class Escaped(NoReturn):
    pass


class BudgetExceeded(NoReturn):
    pass


class OnStableManifold(HorseshoeError):
    pass


class ConeViolation(HorseshoeError):
    pass


class InWTilde(HorseshoeError):
    pass


class NotRealized(HorseshoeError):
    pass


class NewtonBudget(NotRealized):
    pass


class ConfigError(HorseshoeError, ValueError):
    pass
