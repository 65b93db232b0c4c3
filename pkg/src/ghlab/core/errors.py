"""
Errors for ghlab
Exception hierarchy shared by all modules; the CLI maps it to exit codes
"""


class GHLabError(Exception):
    """Base class for every error raised on purpose by ghlab"""
    exit_code = 2


class InputError(GHLabError, ValueError):
    """Malformed input: bad tables, parameters, graphs or files"""


class InfeasibleError(GHLabError):
    """Requested computation exceeds a configured cap or cannot be built"""


class InternalError(GHLabError, RuntimeError):
    """A certified ordering or bound was violated"""
