"""Error types raised by stochgen_apps.

Every error derives from :class:`StochGenError`. Errors caused by a bad argument
also derive from ``ValueError`` so that callers catching ``ValueError`` keep working.
"""


class StochGenError(Exception):
    pass


class SeriesTooShort(StochGenError, ValueError):
    pass


class DegenerateSplit(StochGenError, ValueError):
    pass


class ShapeMismatch(StochGenError, ValueError):
    pass


class InsufficientData(StochGenError, ValueError):
    pass


class SpaceTagMismatch(StochGenError, ValueError):
    pass


class NonFiniteResult(StochGenError, ArithmeticError):
    pass


class DomainError(StochGenError, ValueError):
    pass


class EmptyInput(StochGenError, ValueError):
    pass


class KTooLarge(StochGenError, ValueError):
    pass


class RegionEmpty(StochGenError, ValueError):
    pass


class NoTransitions(StochGenError, ValueError):
    pass


class StateSpaceTooLarge(StochGenError, ValueError):
    """Order selection would need a count table that does not fit in memory.

    Use the deep state generator instead.
    """


class InvalidState(StochGenError, ValueError):
    pass


class UnknownState(StochGenError, ValueError):
    pass


class DegenerateProbability(StochGenError, ArithmeticError):
    pass


class GraphCycle(StochGenError, RuntimeError):
    pass


class NonScalarLoss(StochGenError, ValueError):
    pass


class NoWindows(StochGenError, ValueError):
    pass


class EmptySeries(StochGenError, ValueError):
    pass


class NotPSD(StochGenError, ValueError):
    pass


class SingularSampleCorrelation(StochGenError, ArithmeticError):
    pass


class CovarianceTooLarge(StochGenError, ValueError):
    pass


class RepairFailed(StochGenError, ArithmeticError):
    pass


class ZeroTarget(StochGenError, ValueError):
    pass


class EmptyTailGrid(StochGenError, ValueError):
    pass


class MisalignedStations(StochGenError, ValueError):
    pass


class PipelineStageError(StochGenError, RuntimeError):

    def __init__(self, stage, err):
        self.stage = stage
        super().__init__(f'Stage {stage!r} failed: {type(err).__name__}: {err}')
