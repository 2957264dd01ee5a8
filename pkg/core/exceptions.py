"""
Error hierarchy of the segmentation library.

Every error carries the exit code the command line reports for it:
1 usage/parameter, 2 data, 3 degenerate input.
"""
from typing import Optional


class NlsError(Exception):
    """Base class for all library errors"""
    exit_code = 3


class InputError(NlsError):
    """Bad input data (non-finite values, zero columns, unreadable files)"""
    exit_code = 2


class FormatError(InputError):
    """File content that does not match its declared format"""

    def __init__(self, message: str, line: Optional[int] = None, path: Optional[str] = None):
        self.line = line
        self.path = path
        location = ""
        if path is not None:
            location += f"{path}"
        if line is not None:
            location += f"{':' if location else 'line '}{line}"
        super().__init__(f"{location}: {message}" if location else message)


class DimensionError(InputError):
    """Shapes or dimensions that do not fit together"""


class ParameterError(NlsError):
    """Invalid parameter value"""
    exit_code = 1


class ConfigurationError(ParameterError):
    """Parameter combination the pipeline cannot run with"""


class InfeasibleSpecError(ParameterError):
    """Synthetic data specification that cannot be realised"""


class DegenerateInputError(NlsError):
    """Input for which the algorithm has no meaningful answer"""
    exit_code = 3


class InvariantViolation(NlsError):
    """Internal state that should be unreachable"""
    exit_code = 3
