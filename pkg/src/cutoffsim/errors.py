"""Exception taxonomy shared across the package."""


class ParameterError(ValueError):
    """A model or experiment parameter is outside its admissible range."""


class CapacityError(RuntimeError):
    """A request exceeds an enumeration, memory, or step budget."""


class ShapeError(ValueError):
    """Array arguments have incompatible lengths."""


class CoverageError(ValueError):
    """A TV curve does not reach a requested threshold."""

    def __init__(self, eps: float, tv_min: float):
        super().__init__(f"curve never reaches tv <= {eps} (minimum sampled tv = {tv_min})")
        self.eps = eps
        self.tv_min = tv_min


class UnreachableError(ValueError):
    """The requested hitting target cannot be reached."""


class UnsupportedFamilyError(ValueError):
    """The operation is not defined for this chain family."""


class SimulationTimeout(RuntimeError):
    """Step budget exhausted before every replica finished.

    Carries the partial per-replica results so callers can inspect how
    far the simulation got.
    """

    def __init__(self, message, partial=None, unfinished=None):
        super().__init__(message)
        self.partial = partial
        self.unfinished = unfinished


class CouplingAuditError(RuntimeError):
    """A structural property of a coupling failed during simulation."""


class FitError(ValueError):
    """Scaling-law fit rejected the input data."""
