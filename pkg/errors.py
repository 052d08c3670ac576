"""
Exception hierarchy for the Chen-Fliess expansion toolkit
Library modules raise these; only the command line layer turns them into exit codes
"""

from pathlib import Path
from typing import Optional


class ChenFliessError(Exception):
    """Base class for every error raised by this package"""
    pass


class DomainError(ChenFliessError, ValueError):
    """Argument outside the domain of an operation (time outside [0,T], bad coordinate, s > t, ...)"""
    pass


class ContractError(ChenFliessError):
    """A functional cannot supply the derivatives an operation needs"""
    pass


class NumericalBlowupError(ChenFliessError, ArithmeticError):
    """Solver state became non-finite"""

    def __init__(self, step: int, message: Optional[str] = None):
        self.step = step
        super().__init__(message or f"Non-finite solver state at step {step}")


class ConfigError(ChenFliessError, ValueError):
    """Malformed or unresolvable experiment configuration"""

    def __init__(self, message: str, path: Optional[Path] = None, line: Optional[int] = None):
        self.path = path
        self.line = line
        location = ""
        if path is not None:
            location = f"{path}"
            if line is not None:
                location += f":{line}"
            location += ": "
        super().__init__(f"{location}{message}")
