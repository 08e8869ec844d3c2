"""
Exception hierarchy for the tethered UAV simulator

Every error carries the process exit code the command-line runner
reports for it, so callers can map failures without a lookup table.
"""

from typing import Any, Optional


class TuavError(Exception):
    """Base class for all simulator errors"""
    exit_code = 1

    def __init__(self, message: str, log: Optional[Any] = None):
        super().__init__(message)
        # Partial SimLog when raised from inside a closed-loop run
        self.log = log


# ============================================================
# PARAMETER / CONFIGURATION ERRORS (exit 2)
# ============================================================

class DomainError(TuavError, ValueError):
    """Function called outside its precondition"""
    exit_code = 2


class ParameterError(DomainError):
    """Parameter dataclass built with values that break its invariants"""


class ConfigParseError(TuavError):
    """Malformed line in a run configuration file"""
    exit_code = 2

    def __init__(self, message: str, line_number: int):
        super().__init__(f"line {line_number}: {message}")
        self.line_number = line_number


class ConfigValidationError(TuavError, ValueError):
    """Unknown key or out-of-range value in a run configuration"""
    exit_code = 2


# ============================================================
# GEOMETRY ERRORS (exit 4)
# ============================================================

class GeometryError(TuavError):
    """Tether geometry cannot be realised"""
    exit_code = 4


class InfeasibleSlackError(GeometryError):
    """Tether length does not exceed the straight-line distance"""


class OverLengthError(GeometryError):
    """Requested length exceeds the spool capacity L_T"""


class DegenerateGeometryError(GeometryError):
    """Coincident endpoints or zero horizontal span"""


# ============================================================
# NUMERICAL ERRORS (exit 3)
# ============================================================

class NumericalError(TuavError):
    """Numerical failure during solve or integration"""
    exit_code = 3


class ConvergenceError(NumericalError):
    """Iterative solver did not converge"""


class SingularityError(NumericalError):
    """Control law hit an attitude singularity"""


class InversionError(NumericalError):
    """Thrust too small to invert horizontal demand into attitude"""


class NumericalBlowupError(NumericalError):
    """Non-finite state or derivative"""
