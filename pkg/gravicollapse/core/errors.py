"""
Error types for GraviCollapse

Numerical failures abort a run with exit code 3, configuration problems with
exit code 2. Singular physics (R -> 0, zero separation) is never an error:
it is reported through sentinel values and flags.
"""
from typing import Optional


class GraviCollapseError(Exception):
    """Base class for all library errors"""

    exit_code = 3


class ConfigError(GraviCollapseError):
    """Invalid scenario configuration"""

    exit_code = 2


class ParseError(ConfigError):
    """Configuration text could not be parsed or failed strict validation"""

    def __init__(self, message: str, key: Optional[str] = None, line: Optional[int] = None):
        self.key = key
        self.line = line
        context = []
        if key is not None:
            context.append(f"key '{key}'")
        if line is not None:
            context.append(f"line {line}")
        if context:
            message = f"{message} ({', '.join(context)})"
        super().__init__(message)


class ExportError(GraviCollapseError):
    """Report or snapshot files could not be written or read"""


class NumericalError(GraviCollapseError):
    """A numerical precondition or solver contract was violated"""


class ZeroRadius(NumericalError):
    pass


class NegativeSeparation(NumericalError):
    pass


class BadDimensions(NumericalError):
    pass


class UnresolvedWidth(NumericalError):
    pass


class UnsoftenedPointKernel(NumericalError):
    pass


class StabilityViolation(NumericalError):
    pass


class NormDrift(NumericalError):
    pass


class NoConvergence(NumericalError):
    pass


class NotPositiveSemidefinite(NumericalError):
    pass


class UnresolvedCat(NumericalError):
    pass


class PositivityLoss(RuntimeWarning):
    """Density matrix acquired a negative eigenvalue beyond tolerance"""
