"""Exception hierarchy shared by the library and the CLI.

Each class carries the process exit code the CLI maps it to.
"""


class SpheremetricError(Exception):
    exit_code = 1


class InvalidInputError(SpheremetricError, ValueError):
    """Rejected argument, image, or configuration."""

    exit_code = 2


class DatasetError(SpheremetricError):
    exit_code = 3


class EmptyDatasetError(DatasetError):
    pass


class AspectRatioError(DatasetError, InvalidInputError):
    exit_code = 3


class BackendError(SpheremetricError):
    """Feature backend could not be loaded or produced malformed output."""

    exit_code = 4


class NumericError(SpheremetricError, ArithmeticError):
    exit_code = 5


class SampleSizeWarning(UserWarning):
    """Fewer samples than recommended for a stable Frechet distance."""
