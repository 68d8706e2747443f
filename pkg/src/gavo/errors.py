"""Exception types shared across the package."""


class GavoError(Exception):
    """Base class for all package-specific failures."""


class MissingFile(GavoError, FileNotFoundError):
    pass


class MalformedLine(GavoError, ValueError):
    """A non-comment line in an index or trajectory file could not be parsed."""

    def __init__(self, path, line_number, reason):
        self.path = str(path)
        self.line_number = line_number
        self.reason = reason
        super().__init__(f"{self.path}:{line_number}: {reason}")


class DimensionMismatch(GavoError, ValueError):
    pass


class UnsupportedPixelFormat(GavoError, ValueError):
    pass


class NonUnitQuaternion(GavoError, ValueError):
    pass


class TooManyLevels(GavoError, ValueError):
    pass


class InvalidDepth(GavoError, ValueError):
    pass


class BehindCamera(GavoError, ValueError):
    pass


class DegenerateOverlap(GavoError, RuntimeError):
    """Too few warped pixels land inside the target image to score a motion."""


class ZeroFitnessSum(GavoError, ValueError):
    pass


class NonMonotonicTimestamps(GavoError, ValueError):
    pass


class EmptyOverlap(GavoError, RuntimeError):
    pass


class InsufficientLength(GavoError, ValueError):
    pass


class EmptyInput(GavoError, ValueError):
    pass


class MalformedTrajectory(GavoError, ValueError):
    pass
