"""Exception hierarchy shared by every hardylab module."""


class HardyLabError(Exception):
    """Base class; the CLI maps every subclass to exit status 2."""


class DimensionTooSmall(HardyLabError, ValueError):
    pass


class TooFewPoles(HardyLabError, ValueError):
    pass


class DegeneratePoles(HardyLabError, ValueError):
    pass


class PoleHit(HardyLabError, ValueError):
    """A point fell inside the exclusion radius of a singular point."""


class UnsupportedDomain(HardyLabError, ValueError):
    pass


class UnsupportedOrder(HardyLabError, ValueError):
    pass


class PositivityViolation(HardyLabError, ValueError):
    """The super-solution candidate is not strictly positive where it must be."""


class MaxSubdivisions(HardyLabError, RuntimeError):
    pass


class ExponentMissing(HardyLabError, ValueError):
    pass


class NonIntegrable(HardyLabError, ValueError):
    pass


class MeshTooCoarse(HardyLabError, ValueError):
    pass


class NoConvergence(HardyLabError, RuntimeError):
    pass


class SchemaError(HardyLabError, ValueError):
    """Job validation failure; ``violations`` holds one entry per problem."""

    def __init__(self, violations):
        self.violations = list(violations)
        lines = [f"{v['path']}: {v['message']}" for v in self.violations]
        super().__init__("; ".join(lines) if lines else "invalid job")
