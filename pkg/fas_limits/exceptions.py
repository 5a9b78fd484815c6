"""
Exceptions for FAS Limits

Library code raises these; the CLI in main.py maps them to exit codes.
"""

from typing import Any, Optional


class FasLimitsError(Exception):
    """Base class for all library errors."""


class DomainError(FasLimitsError, ValueError):
    """An argument is outside the domain of the operation."""


class ConvergenceError(FasLimitsError):
    """An iterative method hit its iteration cap before converging."""

    def __init__(self, message: str, last_iterate: Any = None, iterations: int = 0):
        super().__init__(message)
        self.last_iterate = last_iterate
        self.iterations = iterations


class InfeasibleError(FasLimitsError):
    """No power level meets the targets; names the constraint that binds."""

    def __init__(self, message: str, binding_constraint: str):
        super().__init__(message)
        self.binding_constraint = binding_constraint


class EnumerationBudgetError(FasLimitsError):
    """Exhaustive enumeration would exceed the configured budget."""


class ConfigError(FasLimitsError):
    """Experiment configuration could not be parsed or validated."""

    def __init__(self, message: str, key: Optional[str] = None, line: Optional[int] = None):
        super().__init__(message)
        self.key = key
        self.line = line

    def __str__(self) -> str:
        location = []
        if self.line is not None:
            location.append(f"line {self.line}")
        if self.key:
            location.append(f"key '{self.key}'")
        prefix = f"[{', '.join(location)}] " if location else ""
        return f"{prefix}{self.args[0]}"


class NumericalError(FasLimitsError):
    """A factorization or accumulation lost positive-definiteness."""
