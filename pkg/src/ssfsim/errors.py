"""Exception hierarchy shared across the toolkit."""


class SsfError(Exception):
    """Base class for all toolkit errors."""


# trajectory planning
class NonPositiveRadius(SsfError):
    pass


class ArcTooLong(SsfError):
    pass


class NegativeLength(SsfError):
    pass


# screw feasibility
class DegenerateTunnel(SsfError):
    pass


# procedure control
class NonPositiveSpeed(SsfError):
    pass


class StageInputMismatch(SsfError):
    pass


# phantom / drilling simulation
class VoxelTooCoarse(SsfError):
    pass


class MisalignedEntry(SsfError):
    pass


class PlanPhantomMismatch(SsfError):
    pass


class EmptyCenterline(SsfError):
    pass


# registration / evaluation
class DegenerateGeometry(SsfError):
    pass


class NoTransitionFound(SsfError):
    pass


class TooShort(SsfError):
    pass


class CollinearPoints(SsfError):
    pass


class InsufficientArc(SsfError):
    pass


class EmptyInput(SsfError):
    pass
