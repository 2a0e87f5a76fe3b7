"""Exception hierarchy used across topoforge."""


class TopoForgeError(Exception):
    """Base class for all library errors."""


# geometry
class DegenerateOutline(TopoForgeError, ValueError):
    pass


class FeedOutsideOutline(TopoForgeError, ValueError):
    pass


class FeedSamplingExhausted(TopoForgeError, RuntimeError):
    pass


# simulation backends
class InfeasibleDesign(TopoForgeError, ValueError):
    pass


class BackendFailure(TopoForgeError, RuntimeError):
    pass


class NoResonanceFound(TopoForgeError, ValueError):
    pass


class ParseError(TopoForgeError, ValueError):
    pass


class NonMonotoneFrequency(ParseError):
    pass


# scaling surrogate
class ResonanceTrackingLost(TopoForgeError, RuntimeError):
    pass


class RankDeficient(TopoForgeError, ValueError):
    pass


class NonPositiveAlpha(TopoForgeError, ValueError):
    pass


# objectives / classification
class BandOutsideGrid(TopoForgeError, ValueError):
    pass


class BudgetExhausted(TopoForgeError, RuntimeError):
    pass


class EmptyDatabase(TopoForgeError, LookupError):
    pass


# optimization
class PerturbationOutOfBounds(TopoForgeError, ValueError):
    pass


class InvalidSampleCount(TopoForgeError, ValueError):
    pass


class InfeasiblePopulation(TopoForgeError, RuntimeError):
    pass
