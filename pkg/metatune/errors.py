from typing import Optional


class InvalidSpaceError(ValueError):
    """A parameter dimension or search space violates its invariants"""


class EncodingError(ValueError):
    """A genotype entry lies outside the normalized interval [0, 1]"""


class ProtocolError(RuntimeError):
    """The ask/tell sequence of an optimizer was not respected"""


class NoResultError(RuntimeError):
    """A best result was requested before anything was evaluated"""


class OptimizationFailedError(RuntimeError):
    """Every candidate of a stage or rung failed"""


class ScheduleError(ValueError):
    """Invalid successive-halving / hyperband bounds"""


class TrainingDivergedError(ArithmeticError):
    """The training loss became non-finite"""


class InvalidDataError(ValueError):
    """A split is empty or otherwise unusable"""


class InvalidBudgetError(ValueError):
    """A training budget (epochs) is not a positive count"""


class InvalidWeightsError(ValueError):
    """Class weights cannot be computed or have the wrong arity"""


class IngestionError(ValueError):
    """A CSV file could not be turned into a dataset"""

    def __init__(self, message: str, row: Optional[int] = None):
        self.row: Optional[int] = row
        if row is not None:
            message = f"row {row}: {message}"
        super().__init__(message)


class GenerationError(ValueError):
    """Invalid synthetic generator arguments"""


class OversamplingError(ValueError):
    """The minority class is too small to interpolate"""


class InvalidPlanError(ValueError):
    """A cross-validation plan cannot be built"""


class InvalidInputError(ValueError):
    """Mismatched or empty metric inputs"""


class UndefinedMetricError(ValueError):
    """The metric is undefined for these labels (e.g. AUC with one class)"""


class DegenerateTestError(ValueError):
    """A paired test carries no information (zero differences or zero variance)"""


class LeakageError(AssertionError):
    """A subject appears on both sides of a split"""


class IncomparableRunsError(ValueError):
    """Two runs were not produced on the same cross-validation plan"""


class EmptyMaskError(ValueError):
    """A feature mask selects no feature"""
