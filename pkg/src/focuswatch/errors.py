"""Exception hierarchy shared across the engine."""


class FocusWatchError(Exception):
    """Base class for every error raised by this package."""


# -- core types / feature assembly ------------------------------------------

class DimensionMismatch(FocusWatchError):
    pass


class UnknownCourseType(FocusWatchError):
    pass


class NonFiniteInput(FocusWatchError):
    pass


# -- geometry ----------------------------------------------------------------

class NoFace(FocusWatchError):
    pass


class DegenerateFace(FocusWatchError):
    pass


# -- emotion classifier ------------------------------------------------------

class EmptyDataset(FocusWatchError):
    pass


class FormatVersionMismatch(FocusWatchError):
    pass


class CorruptWeights(FocusWatchError):
    pass


# -- PCA ---------------------------------------------------------------------

class InsufficientSamples(FocusWatchError):
    pass


class RankDeficient(FocusWatchError):
    pass


# -- one-class SVM -----------------------------------------------------------

class InfeasibleNu(FocusWatchError):
    pass


class NonFiniteFeature(FocusWatchError):
    pass


class NonConvergence(FocusWatchError):
    """Raised when the SMO loop hits its iteration cap before meeting the
    KKT tolerance. Carries diagnostics instead of pretending success."""

    def __init__(self, message, iterations=None, violation=None):
        super().__init__(message)
        self.iterations = iterations
        self.violation = violation


class ModelNotTrained(FocusWatchError):
    pass


class InsufficientTrainingFrames(FocusWatchError):
    pass


# -- calibration -------------------------------------------------------------

class InsufficientCalibration(FocusWatchError):
    pass


class DegenerateGeometry(FocusWatchError):
    pass


# -- stream io / synthesis ---------------------------------------------------

class InvalidSpec(FocusWatchError):
    pass


class MalformedHeader(FocusWatchError):
    pass


class FrameCountMismatch(FocusWatchError):
    pass


class NonMonotoneTimestamp(FocusWatchError):
    pass


# -- statistics --------------------------------------------------------------

class InsufficientData(FocusWatchError):
    pass


class ZeroWithinVariance(FocusWatchError):
    pass


class InvalidAlpha(FocusWatchError):
    pass


class DegenerateTable(FocusWatchError):
    pass


class WrongItemCount(FocusWatchError):
    pass


class OutOfRangeAnswer(FocusWatchError):
    pass


# -- service -----------------------------------------------------------------

class UnknownSession(FocusWatchError):
    pass


class UnknownClass(FocusWatchError):
    pass


class SchemaViolation(FocusWatchError):
    pass


class OutOfOrderPacket(FocusWatchError):
    pass


class Unauthorized(FocusWatchError):
    pass
