"""Exception hierarchy.

Every error raised on purpose by the package derives from TrailNavError, so
the CLI can map each class to its own exit code.
"""


class TrailNavError(Exception):
    exit_code = 1


# mask I/O and geometry
class MissingFile(TrailNavError):
    exit_code = 10


class MalformedImage(TrailNavError):
    exit_code = 11


class IllegalClassValue(TrailNavError):
    exit_code = 12


class IoFailure(TrailNavError):
    exit_code = 13


class ZeroFactor(TrailNavError, ValueError):
    exit_code = 14


# midline / fitting
class InvalidMidline(TrailNavError, ValueError):
    exit_code = 20


class DegenerateGeometry(TrailNavError, ValueError):
    exit_code = 21


class Underdetermined(TrailNavError, ValueError):
    exit_code = 22


class DuplicateParams(TrailNavError, ValueError):
    exit_code = 23


class NumericalFailure(TrailNavError, ArithmeticError):
    exit_code = 24


# compensation
class DegreeMismatch(TrailNavError, ValueError):
    exit_code = 30


class WeightOutOfRange(TrailNavError, ValueError):
    exit_code = 31


# dataset prep / evaluation
class UnmappedId(TrailNavError, KeyError):
    exit_code = 40


class BoxOutOfBounds(TrailNavError, ValueError):
    exit_code = 41


class EmptyDataset(TrailNavError, ValueError):
    exit_code = 42


class DimensionMismatch(TrailNavError, ValueError):
    exit_code = 43


class NoEvaluablePixels(TrailNavError, ValueError):
    exit_code = 44


# orchestration
class ConfigInvalid(TrailNavError, ValueError):
    exit_code = 50


InvalidConfig = ConfigInvalid


class InvalidWorld(TrailNavError, ValueError):
    exit_code = 51


class EmptyDirectory(TrailNavError):
    exit_code = 52
