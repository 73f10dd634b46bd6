"""
Exception hierarchy for spline_arima and its mapping to process exit codes.
"""

# pylint: disable=missing-class-docstring
class SplineArimaError(Exception):
    pass

# pylint: disable=missing-class-docstring
class SplineArimaDataError(SplineArimaError):
    pass

# pylint: disable=missing-class-docstring
class SplineArimaUsageError(SplineArimaError):
    pass

# pylint: disable=missing-class-docstring
class SplineArimaNumericalError(SplineArimaError):
    pass

class DuplicateDateError(SplineArimaDataError):
    pass

class NonNumericValueError(SplineArimaDataError):
    pass

class UnparseableDateError(SplineArimaDataError):
    pass

class EmptySeriesError(SplineArimaDataError):
    pass

class SeriesTooShortError(SplineArimaDataError):
    pass

class ConstantSeriesError(SplineArimaDataError):
    pass

class MissingValuesError(SplineArimaDataError):
    pass

class InputFileNotFoundError(SplineArimaUsageError):
    pass

class MissingColumnError(SplineArimaUsageError):
    pass

class ConfigError(SplineArimaUsageError):
    pass

class ContractError(SplineArimaUsageError):
    pass

class OutOfRangeError(ContractError):
    pass

class SingularSystemError(SplineArimaNumericalError):
    pass

class RankDeficientError(SplineArimaNumericalError):
    pass

class HessianError(SplineArimaNumericalError):
    pass

class BoundaryOptimumError(SplineArimaNumericalError):
    pass

class NoConvergedCellError(SplineArimaNumericalError):
    pass

class NoFeasibleFoldError(SplineArimaNumericalError):
    pass


# error family to exit code and error message mapping
EXIT_CODE_EXCEPTION_MAPPING = {
    SplineArimaDataError: {
        "exit_code": 1,
        "message": "The input data is invalid for the requested operation."
    },
    SplineArimaUsageError: {
        "exit_code": 2,
        "message": "The command, its flags or its configuration are invalid."
    },
    SplineArimaNumericalError: {
        "exit_code": 3,
        "message": "A numerical procedure failed."
    },
}

# generic failure for anything outside the three families
DEFAULT_EXIT_CODE = 1


def get_exit_code_for_exception(exception: BaseException) -> int:
    """
    Returns the process exit code for an exception by walking the error
    families in the mapping table.
    """
    for family, entry in EXIT_CODE_EXCEPTION_MAPPING.items():
        if isinstance(exception, family):
            return entry["exit_code"]
    return DEFAULT_EXIT_CODE


def format_error_message(exception: BaseException) -> str:
    """
    Prefixes the exception text with its family description and exit code.
    """
    exit_code = get_exit_code_for_exception(exception)
    description = "Unknown Error"
    for family, entry in EXIT_CODE_EXCEPTION_MAPPING.items():
        if isinstance(exception, family):
            description = entry["message"]
            break
    return "Exit-code: {}, Error: {}, Message: {}".format(
        exit_code, type(exception).__name__, str(exception) or description)
