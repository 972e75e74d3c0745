"""Exception hierarchy shared by all modules."""


class DirstabError(Exception):
    """Base class for every error raised by this package."""


class ArgumentError(DirstabError, ValueError):
    pass


class GeometryError(DirstabError):
    """Incomparable grids, shapes leaving the grid box, broken inclusions.

    ``needed_margin`` is set when a dilation overflowed the grid box, so a
    caller can re-box and retry.
    """

    def __init__(self, msg, needed_margin=None):
        super().__init__(msg)
        self.needed_margin = needed_margin


class ResolutionError(GeometryError):
    pass


class DomainEmptyError(DirstabError):
    pass


class PreconditionError(DirstabError):
    pass


class DegeneracyError(DirstabError):
    pass


class RangeError(DirstabError, OverflowError):
    def __init__(self, msg, largest_safe=None):
        super().__init__(msg)
        self.largest_safe = largest_safe


class ClusteringError(DirstabError):
    pass


class SolverError(DirstabError):
    def __init__(self, msg, residuals=None):
        super().__init__(msg)
        self.residuals = residuals


class ConfigError(DirstabError):
    pass


class UnsupportedDimensionError(ArgumentError):
    """Operation is only defined in a different ambient dimension."""
