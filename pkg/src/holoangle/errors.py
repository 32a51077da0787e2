"""Exception types shared by the pipeline, with their CLI exit codes."""


class HoloAngleError(Exception):
    exit_code = 1


class ConfigurationError(HoloAngleError, ValueError):
    """Invalid parameter or option combination."""

    exit_code = 2


class DataValidationError(HoloAngleError, ValueError):
    """Input data inconsistent with what an operation requires."""

    exit_code = 3


class DatasetIOError(HoloAngleError, OSError):
    exit_code = 3


class NumericError(HoloAngleError, ArithmeticError):
    """A NaN or Inf showed up where finite values are required."""

    exit_code = 4
