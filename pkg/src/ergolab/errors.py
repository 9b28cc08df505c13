"""Exception types shared across the lab."""


class LabError(Exception):
    """Base class for every computation error raised by ergolab."""


class NonIntegrableDetected(LabError):
    pass


class ToleranceNotReached(LabError):
    pass


class NotMonotoneDetected(LabError):
    pass


class NormInfinite(LabError):
    pass


class EmptyPrefix(LabError):
    pass


class DegenerateLevelSet(LabError):
    pass


class NoWitness(LabError):
    pass


class EntryTimeBudgetExceeded(LabError):
    pass


class DomainError(LabError, ValueError):
    pass


class NoValidEps(LabError):
    pass


class ScheduleDegenerate(LabError):
    pass


class StageFailed(LabError):
    """A stage of the divergent construction could not be completed."""

    def __init__(self, k, message="", diagnostics=None):
        super().__init__(f"stage {k}: {message}")
        self.k = k
        self.diagnostics = diagnostics or {}


class ScheduleExhausted(StageFailed):
    """The element budget ran out before the requested stage."""
